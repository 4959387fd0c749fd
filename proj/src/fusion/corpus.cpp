#include "atract/fusion/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"
#include "atract/cvvitae/mapping.hpp"
#include "atract/tracksync/render.hpp"
#include "atract/vitalgen/csv.hpp"
#include "atract/vitalgen/generator.hpp"

namespace atract::fusion {

using vitalgen::ActionLabel;

void validate(const FusionCorpusSpec& spec) {
    if (spec.per_class < 1) fail(ErrorKind::config, "per_class must be >= 1");
    if (!(spec.fps > 0.0)) fail(ErrorKind::config, "fps must be > 0");
    const auto& g = spec.geometry;
    if (g.frames < 1 || g.height < 1 || g.width < 1) fail(ErrorKind::config, "clip geometry must be positive");
}

int sensor_steps(const FusionCorpusSpec& spec) {
    return static_cast<int>(std::ceil(spec.geometry.frames / spec.fps - 1e-9));
}

namespace {

PersonClip render_clip(const FusionCorpusSpec& spec, ActionLabel action, int person_id, std::mt19937_64& rng) {
    const auto& g = spec.geometry;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto look = tracksync::random_appearance(rng);
    const double duration = g.frames / spec.fps;
    look.collapse_at = duration * (0.15 + 0.3 * u(rng));

    auto box = tracksync::default_person_box(action);
    const double scale = 0.9 + 0.2 * u(rng);
    box.w *= scale;
    box.h *= scale;
    // crop window keeps the clip's aspect ratio around the person
    const double aspect = static_cast<double>(g.width) / g.height;
    double crop_h = std::max(box.h, box.w / aspect) * 1.5;
    double crop_w = crop_h * aspect;
    const int canvas_w = static_cast<int>(crop_w) + 16, canvas_h = static_cast<int>(crop_h) + 16;
    box.x = (canvas_w - box.w) / 2 + (u(rng) - 0.5) * 6.0;
    box.y = (canvas_h - box.h) / 2 + (u(rng) - 0.5) * 6.0;
    const tracksync::BBox crop{(canvas_w - crop_w) / 2, (canvas_h - crop_h) / 2, crop_w, crop_h};
    const std::uint64_t background_seed = rng();

    PersonClip clip;
    clip.person_id = person_id;
    clip.fps = spec.fps;
    clip.geometry = g;
    clip.pixels.resize(g.values());
    clip.filled.assign(static_cast<std::size_t>(g.frames), false);
    for (int t = 0; t < g.frames; ++t) {
        tracksync::Image canvas(canvas_w, canvas_h);
        tracksync::fill_background(canvas, background_seed, t);
        tracksync::draw_person(canvas, box, action, t / spec.fps, look, spec.ambiguous);
        const auto frame = tracksync::crop_resize(canvas, crop, g.height, g.width);
        std::copy(frame.rgb.begin(), frame.rgb.end(),
                  clip.pixels.begin() + static_cast<std::ptrdiff_t>(t) * g.height * g.width * 3);
    }
    return clip;
}

}  // namespace

std::vector<FusionSample> generate_fusion_corpus(const FusionCorpusSpec& spec) {
    validate(spec);
    const auto profiles = vitalgen::default_field_profiles(spec.ambiguous);
    const int steps = sensor_steps(spec);
    std::vector<FusionSample> out;
    out.reserve(vitalgen::kActionCount * static_cast<std::size_t>(spec.per_class));
    for (auto action : vitalgen::kAllActions) {
        const auto c = vitalgen::index(action);
        for (int i = 0; i < spec.per_class; ++i) {
            const int id = static_cast<int>(c) * spec.per_class + i;
            auto rng = substream(spec.seed, {0xC11, c, static_cast<std::uint64_t>(i)});
            FusionSample s;
            s.clip = render_clip(spec, action, id, rng);
            s.sensors = vitalgen::generate_series(profiles[c], steps, 1.0, spec.seed, c,
                                                  0x10000 + static_cast<std::uint64_t>(i));
            s.sensors.label = action;
            s.sensors.subject_id = "subject-" + std::to_string(id);
            s.label = action;
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<FusionSample> augment_sensors(const std::vector<FusionSample>& samples, const cvvitae::Cvvitae& model,
                                          std::uint64_t seed) {
    std::vector<FusionSample> out = samples;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& s = out[i];
        if (!s.label) continue;
        const auto target = cvvitae::action_to_clinical(*s.label);
        if (!target) continue;
        auto aug = model.augment(s.sensors, *target, seed + i);
        aug.label = *s.label;
        s.sensors = std::move(aug);
    }
    return out;
}

void write_samples(const std::vector<FusionSample>& samples, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%05zu", i);
        const auto sub = dir / name;
        std::filesystem::create_directories(sub);
        tracksync::write_clip(samples[i].clip, sub / "clip");
        vitalgen::write_csv(samples[i].sensors, sub / "sensors.csv");
        nlohmann::json j{{"person_id", samples[i].clip.person_id},
                         {"subject_id", samples[i].sensors.subject_id},
                         {"label", samples[i].label ? std::string(vitalgen::to_string(*samples[i].label)) : ""}};
        std::ofstream(sub / "sample.json") << j.dump(2) << '\n';
    }
}

std::vector<FusionSample> read_samples(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) fail(ErrorKind::io, dir.string() + ": not a sample directory");
    std::vector<std::filesystem::path> subs;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_directory() && e.path().filename().string().rfind("sample_", 0) == 0) subs.push_back(e.path());
    std::sort(subs.begin(), subs.end());
    std::vector<FusionSample> out;
    for (const auto& sub : subs) {
        FusionSample s;
        s.clip = tracksync::read_clip(sub / "clip");
        s.sensors = vitalgen::read_csv(sub / "sensors.csv");
        std::ifstream in(sub / "sample.json");
        if (!in) fail(ErrorKind::io, (sub / "sample.json").string() + ": missing");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::parse, (sub / "sample.json").string() + ": " + e.what());
        }
        const auto label = j.value("label", std::string{});
        if (!label.empty()) {
            s.label = vitalgen::parse_action(label);
            if (!s.label) fail(ErrorKind::parse, (sub / "sample.json").string() + ": unknown label '" + label + "'");
        }
        s.sensors.subject_id = j.value("subject_id", s.sensors.subject_id);
        out.push_back(std::move(s));
    }
    if (out.empty()) fail(ErrorKind::not_found, dir.string() + ": no samples");
    return out;
}

}  // namespace atract::fusion
