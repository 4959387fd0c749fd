#include "atract/tracksync/scene.hpp"

#include <algorithm>
#include <cstdio>

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"

namespace atract::tracksync {

using vitalgen::ActionLabel;

Scene generate_scene(const SceneSpec& spec) {
    if (spec.persons < 0 || spec.frames < 1) fail(ErrorKind::config, "scene: persons >= 0 and frames >= 1 required");
    if (spec.width < 120 || spec.height < 100) fail(ErrorKind::config, "scene: frame must be at least 120x100");
    if (spec.max_gap < 0 || spec.noise_px < 0.0) fail(ErrorKind::config, "scene: negative gap or noise");

    Scene scene;
    scene.spec = spec;
    const int lanes = (spec.persons + 1) / 2;
    const double lane_span = spec.height - 60.0 - 12.0 - 16.0;
    std::uniform_real_distribution<double> u(0.0, 1.0);

    std::vector<std::vector<int>> raw(static_cast<std::size_t>(spec.persons));
    int next_raw = 1;
    for (int k = 0; k < spec.persons; ++k) {
        auto rng = substream(spec.seed, {0x5CE, static_cast<std::uint64_t>(k)});
        ScenePerson p;
        p.truth_id = k + 1;
        p.action = spec.actions.empty() ? vitalgen::kAllActions[static_cast<std::size_t>(k) % vitalgen::kActionCount]
                                        : spec.actions[static_cast<std::size_t>(k) % spec.actions.size()];
        p.subject_id = "subject-" + std::to_string(k + 1);
        p.look = random_appearance(rng);

        const BBox size = default_person_box(p.action);
        const int lane = k / 2;
        const bool second = k % 2 == 1;
        const double y0 = 8.0 + (lanes > 1 ? lane * lane_span / (lanes - 1) : 0.0) + (second ? 12.0 : 0.0) +
                          (60.0 - size.h);
        const double speed = (spec.width - size.w - 20.0) / spec.frames * (0.7 + 0.3 * u(rng));
        const double x0 = second ? spec.width - size.w - 10.0 - 10.0 * u(rng) : 10.0 + 10.0 * u(rng);
        const double vx = second ? -speed : speed;
        const double vy = 0.4 * (u(rng) - 0.5);

        const int gap = spec.max_gap > 0 ? 1 + static_cast<int>(u(rng) * spec.max_gap) % spec.max_gap : 0;
        const int room = std::max(1, spec.frames - gap - 10);
        const int gap_start = gap > 0 ? 5 + static_cast<int>(u(rng) * room) % room : spec.frames;

        int current_raw = next_raw++;
        for (int f = 0; f < spec.frames; ++f) {
            const bool hidden = f >= gap_start && f < gap_start + gap;
            if (spec.id_churn && f == gap_start + gap && gap > 0) current_raw = next_raw++;
            raw[static_cast<std::size_t>(k)].push_back(hidden ? -1 : current_raw);
            if (hidden) {
                p.boxes.emplace_back();
            } else {
                p.boxes.push_back(BBox{x0 + vx * f, y0 + vy * f, size.w, size.h});
            }
        }
        scene.persons.push_back(std::move(p));
    }

    // pairs swap detector ids from the frame their horizontal order flips
    if (spec.id_churn) {
        for (int k = 0; k + 1 < spec.persons; k += 2) {
            auto& a = scene.persons[static_cast<std::size_t>(k)];
            auto& b = scene.persons[static_cast<std::size_t>(k + 1)];
            for (int f = 0; f < spec.frames; ++f) {
                const double ax = a.boxes[f] ? a.boxes[f]->cx() : 0.0;
                const double bx = b.boxes[f] ? b.boxes[f]->cx() : 1e9;
                if (a.boxes[f] && b.boxes[f] && ax >= bx) {
                    for (int g = f; g < spec.frames; ++g) {
                        auto& ra = raw[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)];
                        auto& rb = raw[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(g)];
                        if (ra >= 0 && rb >= 0) std::swap(ra, rb);
                    }
                    break;
                }
            }
        }
    }

    std::normal_distribution<double> noise(0.0, 1.0);
    for (int f = 0; f < spec.frames; ++f) {
        for (int k = 0; k < spec.persons; ++k) {
            const auto& p = scene.persons[static_cast<std::size_t>(k)];
            if (!p.boxes[static_cast<std::size_t>(f)]) continue;
            Detection d;
            d.frame = f;
            d.box = *p.boxes[static_cast<std::size_t>(f)];
            if (spec.noise_px > 0.0) {
                auto rng = substream(spec.seed, {0x401, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(f)});
                d.box.x += spec.noise_px * noise(rng);
                d.box.y += spec.noise_px * noise(rng);
            }
            d.confidence = 0.9;
            d.raw_id = raw[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)];
            scene.detections.push_back(d);
            scene.truth.push_back(p.truth_id);
        }
    }
    return scene;
}

Image SceneFrameSource::frame(int index) const {
    if (index < 0 || index >= frame_count()) fail(ErrorKind::shape, "scene frame index out of range");
    Image img(scene_.spec.width, scene_.spec.height);
    fill_background(img, scene_.spec.seed, index);
    for (const auto& p : scene_.persons)
        if (const auto& box = p.boxes[static_cast<std::size_t>(index)])
            draw_person(img, *box, p.action, static_cast<double>(index), p.look, scene_.spec.ambiguous);
    return img;
}

std::filesystem::path ImageDirectorySource::frame_path(const std::filesystem::path& dir, int index) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.ppm", index);
    return dir / name;
}

ImageDirectorySource::ImageDirectorySource(std::filesystem::path dir, double fps)
    : dir_(std::move(dir)), fps_(fps) {
    if (!std::filesystem::is_directory(dir_)) fail(ErrorKind::io, "frame directory not found: " + dir_.string());
    if (!(fps > 0.0)) fail(ErrorKind::config, "fps must be positive");
    while (std::filesystem::exists(frame_path(dir_, count_))) ++count_;
}

Image ImageDirectorySource::frame(int index) const {
    if (index < 0 || index >= count_) fail(ErrorKind::shape, "frame index out of range");
    return read_ppm(frame_path(dir_, index));
}

void write_frames(const FrameSource& source, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (int f = 0; f < source.frame_count(); ++f) write_ppm(source.frame(f), ImageDirectorySource::frame_path(dir, f));
}

}  // namespace atract::tracksync
