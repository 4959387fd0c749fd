#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atract/tracksync/clip.hpp"
#include "atract/vitalgen/series.hpp"

namespace atract::tracksync {

// One person's aligned clip and sensor window.
struct FusionSample {
    PersonClip clip;
    vitalgen::VitalSignSeries sensors;
    std::optional<vitalgen::ActionLabel> label;  // taken from the sensor series label
};

using PersonSubjectMap = std::vector<std::pair<int, std::string>>;

// CSV with header `person_id,subject_id`.
PersonSubjectMap read_manifest(const std::filesystem::path& path);
void write_manifest(const PersonSubjectMap& mapping, const std::filesystem::path& path);

struct AlignOptions {
    // 0 keeps the sensor samples inside the clip window as they are; otherwise
    // the window is linearly resampled to this many steps.
    int sensor_steps = 0;
};

// Pairs each clip with the sensor samples whose timestamps (i / rate_hz) fall in
// [clip.start_time(), clip.end_time()). The mapping must be a bijection between
// the clips' person ids and the streams' subject ids; otherwise an alignment
// error lists every unmatched id.
std::vector<FusionSample> align(const std::vector<PersonClip>& clips,
                                const std::vector<vitalgen::VitalSignSeries>& streams,
                                const PersonSubjectMap& mapping, const AlignOptions& options = {});

// Sensor window of one series, exposed for testing and the gateway.
vitalgen::VitalSignSeries sensor_window(const vitalgen::VitalSignSeries& series, double t0, double t1,
                                        int steps = 0);

}  // namespace atract::tracksync
