#include "atract/tracksync/clip.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "json.hpp"

#include "atract/common/error.hpp"

namespace atract::tracksync {

namespace {

std::filesystem::path clip_frame_path(const std::filesystem::path& dir, int t) {
    char name[24];
    std::snprintf(name, sizeof name, "frame_%03d.ppm", t);
    return dir / name;
}

}  // namespace

std::vector<PersonClip> crop_clips(const FrameSource& source, const TrackSet& tracks,
                                   const ClipGeometry& geometry, int start_frame) {
    if (geometry.frames < 1 || geometry.height < 1 || geometry.width < 1)
        fail(ErrorKind::config, "clip geometry must be positive");
    if (start_frame < 0) fail(ErrorKind::config, "start_frame must be >= 0");

    std::map<int, Image> cache;
    auto frame = [&](int f) -> const Image& {
        auto it = cache.find(f);
        if (it == cache.end()) it = cache.emplace(f, source.frame(f)).first;
        return it->second;
    };

    std::vector<PersonClip> clips;
    for (const auto& track : tracks.persons) {
        PersonClip clip;
        clip.person_id = track.person_id;
        clip.start_frame = start_frame;
        clip.fps = source.fps();
        clip.geometry = geometry;
        clip.pixels.resize(geometry.values());
        clip.filled.assign(static_cast<std::size_t>(geometry.frames), false);

        const std::size_t per_frame = static_cast<std::size_t>(geometry.height) * geometry.width * 3;
        for (int t = 0; t < geometry.frames; ++t) {
            const int f = start_frame + t;
            // nearest usable observation; earlier wins ties
            const TrackedBox* best = nullptr;
            for (const auto& o : track.observations) {
                if (o.frame >= source.frame_count()) continue;
                if (!best || std::abs(o.frame - f) < std::abs(best->frame - f)) best = &o;
            }
            if (!best) fail(ErrorKind::shape, "crop_clips: track has no frame inside the source");
            clip.filled[static_cast<std::size_t>(t)] = best->frame != f;
            const Image crop = crop_resize(frame(best->frame), best->box, geometry.height, geometry.width);
            std::copy(crop.rgb.begin(), crop.rgb.end(),
                      clip.pixels.begin() + static_cast<std::ptrdiff_t>(per_frame * static_cast<std::size_t>(t)));
        }
        clips.push_back(std::move(clip));
    }
    return clips;
}

void write_clip(const PersonClip& clip, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto& g = clip.geometry;
    const std::size_t per_frame = static_cast<std::size_t>(g.height) * g.width * 3;
    for (int t = 0; t < g.frames; ++t) {
        Image img(g.width, g.height);
        std::copy_n(clip.pixels.begin() + static_cast<std::ptrdiff_t>(per_frame * static_cast<std::size_t>(t)),
                    per_frame, img.rgb.begin());
        write_ppm(img, clip_frame_path(dir, t));
    }
    nlohmann::json j = {{"person_id", clip.person_id}, {"start_frame", clip.start_frame},
                        {"fps", clip.fps},             {"frames", g.frames},
                        {"height", g.height},          {"width", g.width},
                        {"filled", clip.filled}};
    std::ofstream out(dir / "clip.json");
    if (!out) fail(ErrorKind::io, "cannot write " + (dir / "clip.json").string());
    out << j.dump(2) << '\n';
}

PersonClip read_clip(const std::filesystem::path& dir) {
    std::ifstream in(dir / "clip.json");
    if (!in) fail(ErrorKind::io, "missing clip sidecar in " + dir.string());
    PersonClip clip;
    try {
        const auto j = nlohmann::json::parse(in);
        clip.person_id = j.at("person_id");
        clip.start_frame = j.at("start_frame");
        clip.fps = j.at("fps");
        clip.geometry = {j.at("frames"), j.at("height"), j.at("width")};
        clip.filled = j.at("filled").get<std::vector<bool>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, (dir / "clip.json").string() + ": " + e.what());
    }
    const auto& g = clip.geometry;
    if (g.frames < 1 || g.height < 1 || g.width < 1 || clip.filled.size() != static_cast<std::size_t>(g.frames))
        fail(ErrorKind::parse, (dir / "clip.json").string() + ": inconsistent geometry");
    clip.pixels.resize(g.values());
    const std::size_t per_frame = static_cast<std::size_t>(g.height) * g.width * 3;
    for (int t = 0; t < g.frames; ++t) {
        const Image img = read_ppm(clip_frame_path(dir, t));
        if (img.width != g.width || img.height != g.height)
            fail(ErrorKind::shape, clip_frame_path(dir, t).string() + ": frame size differs from sidecar");
        std::copy(img.rgb.begin(), img.rgb.end(),
                  clip.pixels.begin() + static_cast<std::ptrdiff_t>(per_frame * static_cast<std::size_t>(t)));
    }
    return clip;
}

}  // namespace atract::tracksync
