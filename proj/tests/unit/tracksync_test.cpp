#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "doctest.h"

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"
#include "atract/tracksync/align.hpp"
#include "atract/tracksync/hungarian.hpp"
#include "atract/vitalgen/generator.hpp"

using namespace atract;
using namespace atract::tracksync;

namespace {

// Exhaustive minimum over all injective row->column maps.
double brute_force_assignment(const Eigen::MatrixXd& cost) {
    std::vector<int> cols(static_cast<std::size_t>(cost.cols()));
    for (int i = 0; i < cost.cols(); ++i) cols[static_cast<std::size_t>(i)] = i;
    double best = 1e300;
    do {
        double sum = 0.0;
        for (Eigen::Index r = 0; r < cost.rows(); ++r) sum += cost(r, cols[static_cast<std::size_t>(r)]);
        best = std::min(best, sum);
    } while (std::next_permutation(cols.begin(), cols.end()));
    return best;
}

std::vector<std::vector<std::pair<int, BBox>>> track_shapes(const TrackSet& ts) {
    std::vector<std::vector<std::pair<int, BBox>>> out;
    for (const auto& t : ts.persons) {
        out.emplace_back();
        for (const auto& o : t.observations) out.back().emplace_back(o.frame, o.box);
    }
    return out;
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("atract_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("detections parse, sort and reject bad records") {
    std::istringstream empty("");
    CHECK(read_detections(empty).empty());

    std::istringstream shuffled(
        R"({"frame":2,"raw_id":1,"x":1,"y":1,"w":2,"h":2,"conf":0.5})"
        "\n"
        R"({"frame":0,"raw_id":4,"x":3,"y":1,"w":2,"h":2,"conf":0.9})"
        "\n\n"
        R"({"frame":1,"raw_id":4,"x":3,"y":1,"w":2,"h":2})"
        "\n");
    const auto d = read_detections(shuffled);
    REQUIRE(d.size() == 3);
    CHECK(d[0].frame == 0);
    CHECK(d[1].frame == 1);
    CHECK(d[2].frame == 2);
    CHECK(d[1].confidence == 1.0);

    std::istringstream zero_width(
        R"({"frame":0,"raw_id":1,"x":1,"y":1,"w":2,"h":2})"
        "\n"
        R"({"frame":1,"raw_id":1,"x":1,"y":1,"w":0,"h":2})"
        "\n");
    try {
        read_detections(zero_width);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::ostringstream os;
    write_detections(d, os);
    std::istringstream back(os.str());
    CHECK(read_detections(back) == d);
}

TEST_CASE("hungarian matches exhaustive search") {
    auto rng = substream(21, {});
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = 1 + trial % 5;
        const int cols = rows + (trial / 5) % 3;
        Eigen::MatrixXd c(rows, cols);
        for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = std::round(u(rng));
        const auto a = solve_assignment(c);
        std::set<int> used;
        double sum = 0.0;
        for (int r = 0; r < rows; ++r) {
            REQUIRE(a[static_cast<std::size_t>(r)] >= 0);
            used.insert(a[static_cast<std::size_t>(r)]);
            sum += c(r, a[static_cast<std::size_t>(r)]);
        }
        CHECK(used.size() == static_cast<std::size_t>(rows));
        CHECK(sum == doctest::Approx(brute_force_assignment(c)));
        // tall matrices leave rows unassigned
        const auto t = solve_assignment(c.transpose());
        CHECK(std::count(t.begin(), t.end(), -1) == cols - rows);
    }
    CHECK(solve_assignment(Eigen::MatrixXd(0, 3)).empty());
}

TEST_CASE("iou basic values") {
    CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
    CHECK(iou({0, 0, 2, 2}, {1, 0, 2, 2}) == doctest::Approx(1.0 / 3.0));
    CHECK(iou({0, 0, 1, 1}, {5, 5, 1, 1}) == 0.0);
}

TEST_CASE("a single straight track keeps one identity") {
    std::vector<Detection> stream;
    for (int f = 0; f < 40; ++f) stream.push_back({f, {10.0 + 3.0 * f, 20.0, 30, 60}, 0.9, 7});
    const auto ts = resynchronize(stream);
    REQUIRE(ts.persons.size() == 1);
    CHECK(ts.persons[0].observations.size() == 40);
    for (int f = 0; f < 40; ++f) CHECK(*ts.persons[0].at(f) == stream[static_cast<std::size_t>(f)].box);
    CHECK(resynchronize({}).persons.empty());
}

TEST_CASE("crossing with swapped raw ids and a re-entry keep identities") {
    std::vector<Detection> stream;
    std::vector<int> truth;
    for (int f = 0; f < 60; ++f) {
        const bool swapped = f >= 30;
        stream.push_back({f, {10.0 + 4.0 * f, 20.0, 30, 60}, 0.9, swapped ? 2 : 1});
        truth.push_back(1);
        if (f < 20 || f >= 30) {  // person 2 absent for 10 frames
            stream.push_back({f, {250.0 - 4.0 * f, 30.0, 30, 60}, 0.9, swapped ? 1 : 2});
            truth.push_back(2);
        }
    }
    const auto ts = resynchronize(stream);
    CHECK(ts.persons.size() == 2);
    CHECK(identity_recovery(ts, truth) == 1.0);
}

TEST_CASE("resynchronization ignores detection order within a frame") {
    SceneSpec spec;
    spec.persons = 4;
    spec.noise_px = 2.0;
    const auto scene = generate_scene(spec);
    auto shuffled = scene.detections;
    auto rng = substream(3, {});
    auto begin = shuffled.begin();
    while (begin != shuffled.end()) {
        auto end = std::find_if(begin, shuffled.end(), [&](const Detection& d) { return d.frame != begin->frame; });
        std::shuffle(begin, end, rng);
        begin = end;
    }
    CHECK(track_shapes(resynchronize(shuffled)) == track_shapes(resynchronize(scene.detections)));
}

TEST_CASE("scene identity recovery, noiseless and noisy") {
    double worst_clean = 1.0, worst_noisy = 1.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SceneSpec spec;
        spec.seed = seed;
        spec.persons = 2 + static_cast<int>(seed % 3);
        const auto clean = generate_scene(spec);
        worst_clean = std::min(worst_clean, identity_recovery(resynchronize(clean.detections), clean.truth));
        spec.noise_px = 2.0;
        const auto noisy = generate_scene(spec);
        worst_noisy = std::min(worst_noisy, identity_recovery(resynchronize(noisy.detections), noisy.truth));
    }
    CHECK(worst_clean == 1.0);
    CHECK(worst_noisy >= 0.95);
}

TEST_CASE("scene generator is deterministic and churns raw ids") {
    SceneSpec spec;
    spec.persons = 2;
    const auto a = generate_scene(spec);
    const auto b = generate_scene(spec);
    CHECK(a.detections == b.detections);
    std::set<int> raw;
    for (const auto& d : a.detections) raw.insert(d.raw_id);
    CHECK(raw.size() > 2);
    CHECK_THROWS_AS(generate_scene({.persons = -1}), Error);
}

TEST_CASE("crop_clips shape and fill policy") {
    SceneSpec spec;
    spec.persons = 3;
    spec.frames = 40;
    spec.max_gap = 0;
    const auto scene = generate_scene(spec);
    const SceneFrameSource source(scene);
    const auto ts = resynchronize(scene.detections);
    REQUIRE(ts.persons.size() == 3);
    const auto clips = crop_clips(source, ts, {32, 128, 64});
    REQUIRE(clips.size() == 3);
    for (const auto& c : clips) {
        CHECK(c.pixels.size() == 32u * 128 * 64 * 3);
        CHECK(std::none_of(c.filled.begin(), c.filled.end(), [](bool b) { return b; }));
        CHECK(std::all_of(c.pixels.begin(), c.pixels.end(), [](float v) { return v >= 0.0f && v <= 1.0f; }));
    }

    // a person present only in frames 0..15 of a 32-frame window
    TrackSet partial;
    Track t;
    t.person_id = 1;
    for (int f = 0; f < 16; ++f) t.observations.push_back({f, *scene.persons[0].boxes[static_cast<std::size_t>(f)], 0});
    partial.persons.push_back(t);
    const auto pc = crop_clips(source, partial, {32, 16, 8});
    REQUIRE(pc.size() == 1);
    const std::size_t per_frame = 16 * 8 * 3;
    for (int f = 0; f < 32; ++f) CHECK(pc[0].filled[static_cast<std::size_t>(f)] == (f >= 16));
    for (int f = 16; f < 32; ++f)
        CHECK(std::equal(pc[0].pixels.begin() + 15 * per_frame, pc[0].pixels.begin() + 16 * per_frame,
                         pc[0].pixels.begin() + static_cast<std::ptrdiff_t>(f * per_frame)));

    CHECK(crop_clips(source, TrackSet{}, {32, 16, 8}).empty());
}

TEST_CASE("bilinear crop of a constant and a ramp") {
    Image img(10, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(x) / 10.0f;
    const auto out = crop_resize(img, {2, 0, 4, 10}, 5, 8);
    // centers of 8 output columns over [2, 6) land at 2.25 .. 5.75, minus the half-pixel shift
    for (int x = 0; x < 8; ++x)
        CHECK(out.at(2, x, 0) == doctest::Approx((2.0 + (x + 0.5) * 0.5 - 0.5) / 10.0).epsilon(1e-6));
}

TEST_CASE("clip and frame files round trip") {
    SceneSpec spec;
    spec.persons = 1;
    spec.frames = 4;
    const SceneFrameSource source(generate_scene(spec));
    const auto dir = scratch("frames");
    write_frames(source, dir);
    const ImageDirectorySource files(dir);
    CHECK(files.frame_count() == 4);
    const auto a = source.frame(2);
    const auto b = files.frame(2);
    for (std::size_t i = 0; i < a.rgb.size(); ++i) CHECK(std::abs(a.rgb[i] - b.rgb[i]) <= 0.5f / 255.0f + 1e-6f);

    PersonClip clip;
    clip.person_id = 4;
    clip.start_frame = 3;
    clip.geometry = {2, 4, 3};
    clip.filled = {false, true};
    for (std::size_t i = 0; i < clip.geometry.values(); ++i) clip.pixels.push_back(static_cast<float>(i % 256) / 255.0f);
    const auto cdir = scratch("clip");
    write_clip(clip, cdir);
    const auto back = read_clip(cdir);
    CHECK(back.person_id == 4);
    CHECK(back.start_frame == 3);
    CHECK(back.filled == clip.filled);
    CHECK(back.pixels == clip.pixels);
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(cdir);
}

TEST_CASE("align windows and bijection errors") {
    auto spec = vitalgen::default_field_spec();
    spec.per_class = 1;
    spec.timesteps = 100;
    auto streams = vitalgen::generate_field_corpus(spec);
    streams.resize(3);
    std::vector<PersonClip> clips(3);
    for (int k = 0; k < 3; ++k) {
        clips[static_cast<std::size_t>(k)].person_id = k + 1;
        clips[static_cast<std::size_t>(k)].start_frame = 10;
        clips[static_cast<std::size_t>(k)].geometry = {32, 2, 2};
    }
    PersonSubjectMap mapping;
    for (int k = 0; k < 3; ++k) mapping.emplace_back(k + 1, streams[static_cast<std::size_t>(k)].subject_id);

    const auto samples = align(clips, streams, mapping);
    REQUIRE(samples.size() == 3);
    // hand window: frames 10..41 at 1 fps are seconds [10, 42) -> rows 10..41
    CHECK(samples[1].sensors.samples == streams[1].samples.middleRows(10, 32));
    CHECK(samples[1].label == std::get<vitalgen::ActionLabel>(streams[1].label));

    // a 2 Hz stream keeps twice as many rows for the same window
    auto fast = streams[0];
    fast.rate_hz = 2.0;
    CHECK(sensor_window(fast, 10.0, 42.0).samples.rows() == 64);
    CHECK(sensor_window(streams[0], 10.0, 42.0, 8).samples.rows() == 8);
    CHECK_THROWS_AS(sensor_window(streams[0], 90.0, 122.0), Error);

    auto two = streams;
    two.pop_back();
    auto short_map = mapping;
    short_map.pop_back();
    try {
        align(clips, two, short_map);
        FAIL("expected alignment error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::alignment);
        CHECK(std::string(e.what()).find("unmatched persons: 3") != std::string::npos);
    }
    auto dup = mapping;
    dup[2].second = dup[1].second;
    CHECK_THROWS_AS(align(clips, streams, dup), Error);

    const auto mpath = scratch("manifest.csv");
    write_manifest(mapping, mpath);
    CHECK(read_manifest(mpath) == mapping);
    std::filesystem::remove(mpath);
}
