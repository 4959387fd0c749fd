#include "atract/fusion/gradcam.hpp"

#include <algorithm>
#include <cstdio>

#include "atract/common/error.hpp"
#include "atract/tracksync/image.hpp"

namespace atract::fusion {

Heatmap grad_cam(const FusionModel& model, const FusionSample& sample, vitalgen::ActionLabel target) {
    if (!model.trained()) fail(ErrorKind::state, "grad_cam needs a trained model");
    if (!model.config().mask.video) fail(ErrorKind::config, "grad_cam needs a model with the video branch enabled");

    VideoCache cache;
    model.video_encode(sample.clip, false, &cache);
    const Eigen::VectorXd sensor = model.sensor_encode(sample.sensors, model.config().mask);
    const std::vector<double> grad = model.feature_gradient(cache, sensor, target);

    const auto g2 = model.conv2_geometry();
    const std::size_t per = g2.volume();
    Heatmap h;
    h.channel_weights.assign(static_cast<std::size_t>(g2.out_channels), 0.0);
    for (int c = 0; c < g2.out_channels; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per; ++i) acc += grad[c * per + i];
        h.channel_weights[c] = acc / static_cast<double>(per);
    }
    h.raw.assign(per, 0.0);
    for (int c = 0; c < g2.out_channels; ++c)
        for (std::size_t i = 0; i < per; ++i) h.raw[i] += h.channel_weights[c] * cache.act2[c * per + i];
    for (auto& v : h.raw) v = std::max(v, 0.0);
    h.max_raw = *std::max_element(h.raw.begin(), h.raw.end());

    const auto& geo = sample.clip.geometry;
    h.frames = geo.frames;
    h.height = geo.height;
    h.width = geo.width;
    h.values.assign(static_cast<std::size_t>(geo.frames) * geo.height * geo.width, 0.0);
    if (h.max_raw <= 0.0) return h;
    for (int t = 0; t < geo.frames; ++t)
        for (int y = 0; y < geo.height; ++y)
            for (int x = 0; x < geo.width; ++x) {
                const std::size_t src = (static_cast<std::size_t>(t / 2) * g2.height + y / 2) * g2.width + x / 2;
                h.values[(static_cast<std::size_t>(t) * geo.height + y) * geo.width + x] = h.raw[src] / h.max_raw;
            }
    return h;
}

void write_heatmaps(const Heatmap& heatmap, const PersonClip& clip, const std::filesystem::path& dir) {
    if (heatmap.frames != clip.geometry.frames || heatmap.height != clip.geometry.height ||
        heatmap.width != clip.geometry.width)
        fail(ErrorKind::shape, "heatmap and clip differ in shape");
    std::filesystem::create_directories(dir);
    for (int t = 0; t < heatmap.frames; ++t) {
        tracksync::Image img(heatmap.width, heatmap.height);
        for (int y = 0; y < heatmap.height; ++y)
            for (int x = 0; x < heatmap.width; ++x) {
                const auto heat = static_cast<float>(heatmap.at(t, y, x));
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = 0.5f * clip.at(t, y, x, c);
                img.at(y, x, 0) = std::min(1.0f, img.at(y, x, 0) + heat);
            }
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03d.ppm", t);
        tracksync::write_ppm(img, dir / name);
    }
}

}  // namespace atract::fusion
