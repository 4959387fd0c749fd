#pragma once

#include <optional>
#include <vector>

#include "atract/tracksync/detection.hpp"

namespace atract::tracksync {

struct SyncParams {
    int max_gap_frames = 15;
    double gate_radius = 40.0;  // px, one frame after the last observation
    double gate_growth = 4.0;   // px added per missed frame
    int velocity_window = 20;   // observations in the fitted motion line
    double iou_gate = 0.3;      // IoU with the prediction that admits a match on its own
    double distance_weight = 1.0;
    double iou_weight = 1.0;
    double velocity_weight = 0.5;
    double velocity_scale = 5.0;  // px/frame that counts as one unit of velocity change
};

void validate(const SyncParams& params);

struct TrackedBox {
    int frame = 0;
    BBox box;
    std::size_t detection = 0;  // index into the input stream
};

struct Track {
    int person_id = 0;  // canonical, 1-based
    std::vector<TrackedBox> observations;  // frame-ascending

    int first_frame() const { return observations.front().frame; }
    int last_frame() const { return observations.back().frame; }
    std::optional<BBox> at(int frame) const;
};

struct TrackSet {
    std::vector<Track> persons;
    // Canonical person id for each input detection, in input order.
    std::vector<int> person_of;
    int frame_count = 0;  // last frame index + 1
};

// Per-frame optimal assignment of detections to live tracks against a
// constant-velocity prediction; detector raw ids are ignored. Detections are
// processed in a canonical order, so the result does not depend on the order
// of detections inside a frame.
TrackSet resynchronize(const std::vector<Detection>& stream, const SyncParams& params = {});

// Fraction of detections whose canonical id agrees with the ground truth under
// the best one-to-one matching of canonical ids to truth ids.
double identity_recovery(const TrackSet& tracks, const std::vector<int>& truth);

}  // namespace atract::tracksync
