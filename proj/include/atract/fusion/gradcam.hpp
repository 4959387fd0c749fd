#pragma once

#include <filesystem>
#include <vector>

#include "atract/fusion/model.hpp"

namespace atract::fusion {

// Class activation volume for one clip. `values` has the clip's resolution
// (frames x height x width, row-major per frame) and lies in [0, 1].
struct Heatmap {
    int frames = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    // At feature-map resolution (T/2 x H/2 x W/2): per-channel weights (mean
    // gradient of the target logit) and the rectified weighted sum.
    std::vector<double> channel_weights;
    std::vector<double> raw;
    double max_raw = 0.0;

    double at(int t, int y, int x) const {
        return values[(static_cast<std::size_t>(t) * height + y) * width + x];
    }
};

// Gradient-weighted activation map over the last convolution stage for
// `target`, upsampled by nearest neighbour and divided by its maximum over the
// whole clip (all zero when that maximum is 0).
// Errors: untrained model -> state; video disabled by the model's mask -> config.
Heatmap grad_cam(const FusionModel& model, const FusionSample& sample, vitalgen::ActionLabel target);

// frame_NNN.ppm overlays (heat in the red channel, clip dimmed underneath).
void write_heatmaps(const Heatmap& heatmap, const PersonClip& clip, const std::filesystem::path& dir);

}  // namespace atract::fusion
