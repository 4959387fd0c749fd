#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "atract/tracksync/detection.hpp"
#include "atract/tracksync/image.hpp"
#include "atract/tracksync/render.hpp"

namespace atract::tracksync {

// Procedural multi-person scene with ground-truth identities. Persons walk in
// pairs along shared lanes so that every pair crosses; each person is occluded
// once for up to `max_gap` frames, and with `id_churn` the detector ids of a
// pair swap at the crossing and change after every occlusion.
struct SceneSpec {
    std::uint64_t seed = 7;
    int persons = 3;
    int frames = 96;
    int width = 320;
    int height = 180;
    int max_gap = 15;
    double noise_px = 0.0;  // std of the detection centroid noise
    bool id_churn = true;
    bool ambiguous = false;  // see draw_person
    // Action per person; cycles through all actions when empty.
    std::vector<vitalgen::ActionLabel> actions;
};

struct ScenePerson {
    int truth_id = 0;
    vitalgen::ActionLabel action = vitalgen::ActionLabel::running;
    std::string subject_id;
    Appearance look;
    std::vector<std::optional<BBox>> boxes;  // per frame, empty while occluded
};

struct Scene {
    SceneSpec spec;
    std::vector<ScenePerson> persons;
    std::vector<Detection> detections;  // frame-sorted
    std::vector<int> truth;             // truth_id per detection
};

Scene generate_scene(const SceneSpec& spec);

class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual int frame_count() const = 0;
    virtual Image frame(int index) const = 0;
    // Frames per second of the source; clip times derive from it.
    virtual double fps() const { return 1.0; }
};

// Renders the scene's persons at their true boxes.
class SceneFrameSource : public FrameSource {
public:
    explicit SceneFrameSource(Scene scene) : scene_(std::move(scene)) {}
    int frame_count() const override { return scene_.spec.frames; }
    Image frame(int index) const override;

private:
    Scene scene_;
};

// Directory of frame_NNNNNN.ppm files, numbered from 0 without holes.
class ImageDirectorySource : public FrameSource {
public:
    explicit ImageDirectorySource(std::filesystem::path dir, double fps = 1.0);
    int frame_count() const override { return count_; }
    Image frame(int index) const override;
    double fps() const override { return fps_; }

    static std::filesystem::path frame_path(const std::filesystem::path& dir, int index);

private:
    std::filesystem::path dir_;
    int count_ = 0;
    double fps_;
};

void write_frames(const FrameSource& source, const std::filesystem::path& dir);

}  // namespace atract::tracksync
