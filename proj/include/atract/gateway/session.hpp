#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "atract/fusion/model.hpp"

namespace atract::gateway {

// One tracked person: the clip over the whole recording and the paired sensor stream.
struct PersonStream {
    int person_id = 0;
    std::string subject_id;
    tracksync::PersonClip clip;
    vitalgen::VitalSignSeries sensors;
    std::filesystem::path clip_dir;  // relative to the session directory
};

// Session directory:
//   session.json   {"version":1,"model":...,"manifest":...,"clips":...,"sensors":...}
//   <model>        fusion checkpoint
//   <manifest>     person_id,subject_id
//   <clips>/person_<id>/   clip frames + clip.json
//   <sensors>/<subject_id>.csv
struct Session {
    std::filesystem::path dir;
    std::optional<fusion::FusionModel> model;
    std::vector<PersonStream> persons;  // manifest order

    double duration() const;  // latest clip frame or sensor sample time [s]
};

// Errors: missing session.json or any referenced asset -> not_found; the
// model's clip resolution differing from the session clips -> shape.
Session load_session(const std::filesystem::path& dir);

// Writes a session directory, copying the model checkpoint into it.
void write_session(const std::filesystem::path& dir, const std::filesystem::path& model_checkpoint,
                   const std::vector<tracksync::PersonClip>& clips,
                   const std::vector<vitalgen::VitalSignSeries>& streams, const tracksync::PersonSubjectMap& mapping);

// Model input for the window ending at stream time `t`: the latest
// frames * stride frames with timestamp <= t, every stride-th one kept
// (stride = round(clip fps / model clip_fps)), and the sensor samples spanning
// the same interval. Empty while the history is shorter than that.
std::optional<fusion::FusionSample> window_at(const PersonStream& person, const fusion::FusionConfig& config, double t);

}  // namespace atract::gateway
