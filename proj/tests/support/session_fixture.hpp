#pragma once

// Small on-disk gateway session for tests: a few persons with long clips and
// sensor streams, plus an untrained tiny fusion checkpoint. Test-only.

#include <filesystem>
#include <string>

#include "atract/common/rng.hpp"
#include "atract/fusion/model.hpp"
#include "atract/gateway/session.hpp"

namespace atract::testing {

struct SessionFixtureSpec {
    int persons = 3;
    int frames = 12;        // long clip length
    double fps = 4.0;       // clip and sensor rate
    std::uint64_t seed = 1;
};

inline fusion::FusionConfig fixture_model_config(double fps) {
    fusion::FusionConfig c;
    c.geometry = {4, 8, 4};
    c.clip_fps = fps;
    c.conv1_channels = 2;
    c.conv2_channels = 3;
    c.video_dim = 5;
    c.sensor_dim = 4;
    c.head_hidden = 6;
    return c;
}

inline std::filesystem::path make_session(const std::filesystem::path& dir, const SessionFixtureSpec& spec = {}) {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    fusion::FusionModel model(fixture_model_config(spec.fps));
    model.init(spec.seed);
    model.mark_trained();
    const auto ckpt = dir.parent_path() / (dir.filename().string() + ".ckpt");
    model.save(ckpt);

    std::vector<tracksync::PersonClip> clips;
    std::vector<vitalgen::VitalSignSeries> streams;
    tracksync::PersonSubjectMap mapping;
    for (int p = 0; p < spec.persons; ++p) {
        auto rng = substream(spec.seed, {0x5E, static_cast<std::uint64_t>(p)});
        std::uniform_real_distribution<float> px(0.0f, 1.0f);
        tracksync::PersonClip clip;
        clip.person_id = p;
        clip.fps = spec.fps;
        clip.geometry = {spec.frames, 8, 4};
        clip.pixels.resize(clip.geometry.values());
        for (auto& v : clip.pixels) v = std::round(px(rng) * 255.0f) / 255.0f;
        clip.filled.assign(static_cast<std::size_t>(spec.frames), false);
        clips.push_back(std::move(clip));

        vitalgen::VitalSignSeries s;
        s.rate_hz = spec.fps;
        s.subject_id = "subject-" + std::to_string(p);
        s.samples.resize(spec.frames, 4);
        std::normal_distribution<double> n(0.0, 1.0);
        for (int t = 0; t < spec.frames; ++t) {
            s.samples(t, 0) = 90 + 5 * n(rng);
            s.samples(t, 1) = 18 + n(rng);
            s.samples(t, 2) = 10 + 3 * n(rng);
            s.samples(t, 3) = 0.5 + 0.05 * n(rng);
        }
        streams.push_back(std::move(s));
        mapping.emplace_back(p, "subject-" + std::to_string(p));
    }
    gateway::write_session(dir, ckpt, clips, streams, mapping);
    std::filesystem::remove(ckpt);
    return dir;
}

}  // namespace atract::testing
