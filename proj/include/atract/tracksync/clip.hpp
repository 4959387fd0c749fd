#pragma once

#include <filesystem>
#include <vector>

#include "atract/tracksync/resync.hpp"
#include "atract/tracksync/scene.hpp"

namespace atract::tracksync {

struct ClipGeometry {
    int frames = 32;
    int height = 128;
    int width = 64;

    std::size_t values() const { return static_cast<std::size_t>(frames) * height * width * 3; }
    friend bool operator==(const ClipGeometry&, const ClipGeometry&) = default;
};

// Person-centric frame sequence, stored as frames x height x width x RGB in [0, 1].
struct PersonClip {
    int person_id = 0;
    int start_frame = 0;
    double fps = 1.0;
    ClipGeometry geometry;
    std::vector<float> pixels;
    // Frames where the person was absent and the nearest present crop was repeated.
    std::vector<bool> filled;

    float at(int t, int y, int x, int c) const {
        return pixels[((static_cast<std::size_t>(t) * geometry.height + y) * geometry.width + x) * 3 + c];
    }
    float& at(int t, int y, int x, int c) {
        return pixels[((static_cast<std::size_t>(t) * geometry.height + y) * geometry.width + x) * 3 + c];
    }
    double start_time() const { return start_frame / fps; }
    double end_time() const { return (start_frame + geometry.frames) / fps; }
};

// One clip per canonical person over frames [start_frame, start_frame + frames).
// Frames where the person is absent repeat the crop of the nearest present
// observation (earlier one on ties) and are flagged in `filled`.
std::vector<PersonClip> crop_clips(const FrameSource& source, const TrackSet& tracks,
                                   const ClipGeometry& geometry = {}, int start_frame = 0);

// Directory of frame_NNN.ppm files plus clip.json.
void write_clip(const PersonClip& clip, const std::filesystem::path& dir);
PersonClip read_clip(const std::filesystem::path& dir);

}  // namespace atract::tracksync
