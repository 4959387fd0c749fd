#include "atract/gateway/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "atract/common/error.hpp"
#include "atract/vitalgen/csv.hpp"

namespace atract::gateway {

namespace fs = std::filesystem;

double Session::duration() const {
    double end = 0.0;
    for (const auto& p : persons) {
        end = std::max(end, (p.clip.start_frame + p.clip.geometry.frames - 1) / p.clip.fps);
        if (p.sensors.rate_hz > 0.0)
            end = std::max(end, static_cast<double>(p.sensors.samples.rows() - 1) / p.sensors.rate_hz);
    }
    return end;
}

namespace {

fs::path require(const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) fail(ErrorKind::not_found, "session " + what + " missing: " + p.string());
    return p;
}

}  // namespace

Session load_session(const fs::path& dir) {
    const auto meta_path = require(dir / "session.json", "descriptor");
    nlohmann::json meta;
    try {
        std::ifstream in(meta_path);
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, meta_path.string() + ": " + e.what());
    }
    if (meta.value("version", 0) != 1) fail(ErrorKind::parse, meta_path.string() + ": unsupported version");

    Session s;
    s.dir = dir;
    const auto field = [&](const char* key) {
        if (!meta.contains(key) || !meta[key].is_string()) fail(ErrorKind::parse, meta_path.string() + ": missing " + key);
        return fs::path(meta[key].get<std::string>());
    };
    s.model.emplace(fusion::FusionModel::load(require(dir / field("model"), "model")));
    const auto mapping = tracksync::read_manifest(require(dir / field("manifest"), "manifest"));
    const auto clips = field("clips"), sensors = field("sensors");
    for (const auto& [person, subject] : mapping) {
        PersonStream p;
        p.person_id = person;
        p.subject_id = subject;
        p.clip_dir = clips / ("person_" + std::to_string(person));
        p.clip = tracksync::read_clip(require(dir / p.clip_dir, "clip"));
        p.sensors = vitalgen::read_csv(require(dir / sensors / (subject + ".csv"), "sensor stream"));
        p.sensors.subject_id = subject;
        const auto& g = s.model->config().geometry;
        if (p.clip.geometry.height != g.height || p.clip.geometry.width != g.width)
            fail(ErrorKind::shape, "session clips for person " + std::to_string(person) +
                                       " do not match the model's clip resolution");
        s.persons.push_back(std::move(p));
    }
    if (s.persons.empty()) fail(ErrorKind::not_found, "session has no persons: " + dir.string());
    return s;
}

void write_session(const fs::path& dir, const fs::path& model_checkpoint, const std::vector<tracksync::PersonClip>& clips,
                   const std::vector<vitalgen::VitalSignSeries>& streams, const tracksync::PersonSubjectMap& mapping) {
    fs::create_directories(dir / "clips");
    fs::create_directories(dir / "sensors");
    fs::copy_file(model_checkpoint, dir / "model.ckpt", fs::copy_options::overwrite_existing);
    tracksync::write_manifest(mapping, dir / "manifest.csv");
    for (const auto& c : clips) tracksync::write_clip(c, dir / "clips" / ("person_" + std::to_string(c.person_id)));
    for (const auto& st : streams) vitalgen::write_csv(st, dir / "sensors" / (st.subject_id + ".csv"));
    const nlohmann::json meta{{"version", 1},
                              {"model", "model.ckpt"},
                              {"manifest", "manifest.csv"},
                              {"clips", "clips"},
                              {"sensors", "sensors"}};
    std::ofstream(dir / "session.json") << meta.dump(2) << '\n';
}

std::optional<fusion::FusionSample> window_at(const PersonStream& person, const fusion::FusionConfig& config,
                                              double t) {
    const auto& clip = person.clip;
    const int stride = std::max(1, static_cast<int>(std::lround(clip.fps / config.clip_fps)));
    const int frames = config.geometry.frames;
    // frames with timestamp <= t, relative to the clip start
    const int available =
        std::min(clip.geometry.frames, static_cast<int>(std::floor(t * clip.fps + 1e-9)) + 1 - clip.start_frame);
    const int span = frames * stride;
    if (available < span) return std::nullopt;
    const int f0 = available - span;

    fusion::FusionSample s;
    s.clip.person_id = clip.person_id;
    s.clip.start_frame = clip.start_frame + f0;
    s.clip.fps = clip.fps / stride;
    s.clip.geometry = config.geometry;
    s.clip.filled.resize(static_cast<std::size_t>(frames));
    const std::size_t per_frame = static_cast<std::size_t>(config.geometry.height) * config.geometry.width * 3;
    s.clip.pixels.resize(per_frame * static_cast<std::size_t>(frames));
    for (int k = 0; k < frames; ++k) {
        const int f = f0 + k * stride;
        std::copy_n(clip.pixels.begin() + static_cast<std::ptrdiff_t>(per_frame * static_cast<std::size_t>(f)),
                    per_frame, s.clip.pixels.begin() + static_cast<std::ptrdiff_t>(per_frame * static_cast<std::size_t>(k)));
        s.clip.filled[static_cast<std::size_t>(k)] = clip.filled.empty() ? false : clip.filled[static_cast<std::size_t>(f)];
    }
    const double t0 = (clip.start_frame + f0) / clip.fps, t1 = (clip.start_frame + available) / clip.fps;
    const auto rate = person.sensors.rate_hz;
    if (!(rate > 0.0) || std::ceil(t1 * rate - 1e-9) > static_cast<double>(person.sensors.samples.rows()))
        return std::nullopt;
    s.sensors = tracksync::sensor_window(person.sensors, t0, t1);
    return s;
}

}  // namespace atract::gateway
