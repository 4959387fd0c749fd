#pragma once

// Tiny fusion configurations, random samples and the class-activation oracle
// shared by the unit and acceptance tests. Test-only.

#include <random>
#include <vector>

#include "atract/fusion/model.hpp"

namespace atract::testing {

using fusion::ClipGeometry;
using fusion::FusionConfig;
using fusion::FusionModel;
using fusion::FusionSample;
using fusion::VideoCache;
using vitalgen::ActionLabel;

inline FusionConfig tiny_config() {
    FusionConfig c;
    c.geometry = {4, 8, 4};
    c.conv1_channels = 2;
    c.conv2_channels = 3;
    c.video_dim = 5;
    c.sensor_dim = 4;
    c.head_hidden = 6;
    c.dropout = 0.3;
    return c;
}

inline FusionSample random_sample(const ClipGeometry& g, int steps, ActionLabel label, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> px(0.0f, 1.0f);
    std::normal_distribution<double> n(0.0, 1.0);
    FusionSample s;
    s.clip.geometry = g;
    s.clip.pixels.resize(g.values());
    for (auto& p : s.clip.pixels) p = px(rng);
    s.clip.filled.assign(static_cast<std::size_t>(g.frames), false);
    s.sensors.samples.resize(steps, 4);
    for (Eigen::Index t = 0; t < steps; ++t) {
        s.sensors.samples(t, 0) = 90 + 10 * n(rng);
        s.sensors.samples(t, 1) = 18 + 3 * n(rng);
        s.sensors.samples(t, 2) = 20 + 15 * n(rng);
        s.sensors.samples(t, 3) = 0.5 + 0.2 * n(rng);
    }
    s.sensors.label = label;
    s.sensors.subject_id = "s";
    s.label = label;
    return s;
}

// Class-activation oracle: per-channel weights from a finite difference of the
// target logit under a uniform shift of that channel, then an explicit loop.
inline std::vector<double> cam_oracle(const FusionModel& model, const FusionSample& s, ActionLabel target) {
    VideoCache cache;
    model.video_encode(s.clip, false, &cache);
    const auto sensor = model.sensor_encode(s.sensors, model.config().mask);
    const auto g2 = model.conv2_geometry();
    const std::size_t n = g2.volume();
    const double delta = 1e-4;
    std::vector<double> cam(n, 0.0);
    for (int c = 0; c < g2.out_channels; ++c) {
        auto up = cache.act2, down = cache.act2;
        for (std::size_t i = 0; i < n; ++i) {
            up[c * n + i] += delta;
            down[c * n + i] -= delta;
        }
        const double weight = (model.logit_from_features(up, sensor, target) -
                               model.logit_from_features(down, sensor, target)) /
                              (2.0 * delta) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) cam[i] += weight * cache.act2[c * n + i];
    }
    for (auto& v : cam) v = v > 0.0 ? v : 0.0;
    return cam;
}

}  // namespace atract::testing
