// atract: command-line front end for data generation, training, evaluation,
// explanation and the replay gateway.

#include <algorithm>
#include <cmath>
#include <csignal>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include <boost/asio.hpp>

#include "CLI11.hpp"
#include "json.hpp"
#include "run_dir.hpp"

#include "atract/common/error.hpp"
#include "atract/cvvitae/mapping.hpp"
#include "atract/cvvitae/model.hpp"
#include "atract/cvvitae/proximity.hpp"
#include "atract/fusion/corpus.hpp"
#include "atract/fusion/gradcam.hpp"
#include "atract/fusion/train.hpp"
#include "atract/gateway/server.hpp"
#include "atract/gateway/session.hpp"
#include "atract/tracksync/resync.hpp"
#include "atract/tracksync/scene.hpp"
#include "atract/vitalgen/csv.hpp"
#include "atract/vitalgen/generator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace atract::cli {
namespace {

using vitalgen::VitalSignSeries;

// Registers options and remembers how to serialize their values into the
// run configuration.
class Options {
public:
    explicit Options(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& flag, T& var, const std::string& desc) {
        record(flag, var);
        return app_->add_option(flag, var, desc)->capture_default_str();
    }
    CLI::Option* flag(const std::string& flag, bool& var, const std::string& desc) {
        record(flag, var);
        return app_->add_flag(flag, var, desc);
    }
    json config() const {
        json j = json::object();
        for (const auto& d : dump_) d(j);
        return j;
    }
    CLI::App* app() const { return app_; }

private:
    template <class T>
    void record(const std::string& flag, T& var) {
        const auto key = flag.substr(2);
        dump_.push_back([key, &var](json& j) { j[key] = var; });
    }

    CLI::App* app_;
    std::vector<std::function<void(json&)>> dump_;
};

struct Common {
    std::string out;
    std::string runs = "runs";
};

RunDir open_run(const Common& common, const std::string& name, const json& config) {
    const fs::path dir = common.out.empty() ? RunDir::default_path(common.runs, name, config) : fs::path(common.out);
    return RunDir(dir, name, config);
}

void write_series_dir(const std::vector<VitalSignSeries>& series, const fs::path& dir) {
    fs::create_directories(dir);
    char name[32];
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::snprintf(name, sizeof name, "series_%05zu.csv", i);
        vitalgen::write_csv(series[i], dir / name);
    }
}

std::vector<VitalSignSeries> read_series_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::not_found, "series directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(ErrorKind::not_found, "no .csv series in " + dir.string());
    std::vector<VitalSignSeries> out;
    for (const auto& f : files) out.push_back(vitalgen::read_csv(f));
    return out;
}

void write_json(const json& j, const fs::path& path) { std::ofstream(path) << j.dump(2) << '\n'; }

json evaluation_json(const fusion::Evaluation& e) {
    json confusion = json::array();
    for (int r = 0; r < fusion::kClasses; ++r) {
        json row = json::array();
        for (int c = 0; c < fusion::kClasses; ++c) row.push_back(e.confusion(r, c));
        confusion.push_back(row);
    }
    return {{"accuracy", e.accuracy}, {"total", e.total}, {"confusion", confusion}};
}

void print_result(const RunDir& run, json extra = json::object()) {
    extra["run_dir"] = run.path().generic_string();
    std::cout << extra.dump() << std::endl;
}

// gen-data ------------------------------------------------------------------

struct GenData {
    Common common;
    std::uint64_t seed = 42;
    bool ambiguous = false;
    int field_per_class = 10;
    int clinical_per_class = 40;
    int fusion_per_class = 40;
    int frames = 8;
    int height = 16;
    int width = 8;
    double fps = 0.5;
    int scene_persons = 3;
    int scene_frames = 96;
    double scene_fps = 1.0;
    double noise_px = 0.0;

    void attach(Options& o) {
        o.add("--seed", seed, "Master seed");
        o.flag("--ambiguous", ambiguous, "Injury classes share the healthy-walking profile and look");
        o.add("--field-per-class", field_per_class, "Field series per action");
        o.add("--clinical-per-class", clinical_per_class, "Clinical reference series per condition");
        o.add("--fusion-per-class", fusion_per_class, "Fusion samples per action");
        o.add("--frames", frames, "Clip frames");
        o.add("--height", height, "Clip height");
        o.add("--width", width, "Clip width");
        o.add("--fps", fps, "Clip frame rate");
        o.add("--scene-persons", scene_persons, "Persons in the replay scene");
        o.add("--scene-frames", scene_frames, "Frames in the replay scene");
        o.add("--scene-fps", scene_fps, "Frame rate of the replay scene");
        o.add("--noise-px", noise_px, "Detection centroid noise in the scene");
    }

    void run(RunDir& out) const {
        out.set_seed("seed", seed);
        fusion::FusionCorpusSpec fspec;
        fspec.seed = seed;
        fspec.per_class = fusion_per_class;
        fspec.geometry = {frames, height, width};
        fspec.fps = fps;
        fspec.ambiguous = ambiguous;
        fusion::validate(fspec);
        const int steps = fusion::sensor_steps(fspec);

        auto field = vitalgen::default_field_spec(ambiguous);
        field.seed = seed;
        field.per_class = field_per_class;
        field.timesteps = steps;
        write_series_dir(vitalgen::generate_field_corpus(field), out / "field");

        auto clinical = vitalgen::default_clinical_spec();
        clinical.seed = seed;
        clinical.per_class = clinical_per_class;
        clinical.timesteps = steps;
        write_series_dir(vitalgen::generate_clinical_reference(clinical), out / "clinical");

        fusion::write_samples(fusion::generate_fusion_corpus(fspec), out / "samples");

        tracksync::SceneSpec sspec;
        sspec.seed = seed;
        sspec.persons = scene_persons;
        sspec.frames = scene_frames;
        sspec.noise_px = noise_px;
        sspec.ambiguous = ambiguous;
        const auto scene = tracksync::generate_scene(sspec);
        const fs::path sdir = out / "scene";
        fs::create_directories(sdir / "sensors");
        tracksync::write_frames(tracksync::SceneFrameSource(scene), sdir / "frames");
        tracksync::write_detections(scene.detections, sdir / "detections.ndjson");
        {
            std::ofstream truth(sdir / "truth.csv");
            truth << "detection,truth_id\n";
            for (std::size_t i = 0; i < scene.truth.size(); ++i) truth << i << ',' << scene.truth[i] << '\n';
        }
        json persons = json::array();
        const auto profiles = vitalgen::default_field_profiles(ambiguous);
        const int scene_steps = static_cast<int>(std::ceil(scene_frames / scene_fps));
        for (const auto& p : scene.persons) {
            persons.push_back({{"truth_id", p.truth_id},
                               {"subject_id", p.subject_id},
                               {"action", std::string(vitalgen::to_string(p.action))}});
            auto s = vitalgen::generate_series(profiles[vitalgen::index(p.action)], scene_steps, 1.0, seed, 0x5C5,
                                               static_cast<std::uint64_t>(p.truth_id));
            s.label = p.action;
            s.subject_id = p.subject_id;
            vitalgen::write_csv(s, sdir / "sensors" / (p.subject_id + ".csv"));
        }
        write_json({{"fps", scene_fps}, {"frames", scene_frames}, {"persons", persons}}, sdir / "scene.json");
        print_result(out, {{"sensor_steps", steps}});
    }
};

// train-cvvitae ---------------------------------------------------------------

struct TrainCvvitae {
    Common common;
    std::string reference;
    cvvitae::CvvitaeConfig config;

    void attach(Options& o) {
        o.add("--reference", reference, "Directory of clinical reference series")->required();
        o.add("--epochs", config.epochs, "Training epochs");
        o.add("--batch", config.batch_size, "Batch size");
        o.add("--lr", config.learning_rate, "Adam learning rate");
        o.add("--alpha", config.alpha, "Weight of reconstruction + KL against the regularizer");
        o.add("--latent", config.latent_dim, "Latent dimension");
        o.add("--seed", config.seed, "Seed");
    }

    void run(RunDir& out) const {
        out.add_input("reference", reference);
        out.set_seed("seed", config.seed);
        const auto corpus = read_series_dir(reference);
        auto result = cvvitae::train(corpus, config);
        result.model.save(out / "model.ckpt");
        cvvitae::write_history_csv(result.history, out / "history.csv");
        print_result(out, {{"final_loss", result.history.empty() ? 0.0 : result.history.back().total}});
    }
};

// augment ---------------------------------------------------------------------

struct Augment {
    Common common;
    std::string model;
    std::string samples;
    std::uint64_t seed = 1;

    void attach(Options& o) {
        o.add("--model", model, "cvvitae checkpoint")->required();
        o.add("--samples", samples, "Fusion sample directory")->required();
        o.add("--seed", seed, "Augmentation seed");
    }

    void run(RunDir& out) const {
        out.add_input("model", model);
        out.add_input("samples", samples);
        out.set_seed("seed", seed);
        const auto m = cvvitae::Cvvitae::load(model);
        const auto augmented = fusion::augment_sensors(fusion::read_samples(samples), m, seed);
        fusion::write_samples(augmented, out / "samples");
        print_result(out, {{"samples", augmented.size()}});
    }
};

// proximity-report ------------------------------------------------------------

struct ProximityReport {
    Common common;
    std::string model;
    std::string reference;
    std::string field;
    std::uint64_t seed = 1;
    bool z_scored = false;

    void attach(Options& o) {
        o.add("--model", model, "cvvitae checkpoint")->required();
        o.add("--reference", reference, "Directory of clinical reference series")->required();
        o.add("--field", field, "Directory of field series")->required();
        o.add("--seed", seed, "Augmentation seed");
        o.flag("--z-scored", z_scored, "Score in pooled reference standard deviations");
    }

    void run(RunDir& out) const {
        out.add_input("model", model);
        out.add_input("reference", reference);
        out.add_input("field", field);
        out.set_seed("seed", seed);
        const auto m = cvvitae::Cvvitae::load(model);
        const auto ref = read_series_dir(reference);
        const auto series = read_series_dir(field);

        std::ofstream csv(out / "proximity.csv");
        csv << "action,target";
        for (auto c : vitalgen::kAllClinical) csv << ',' << vitalgen::to_string(c);
        csv << ",nearest\n";
        json report = json::array();
        for (auto a : vitalgen::kAllActions) {
            const auto target = cvvitae::action_to_clinical(a);
            if (!target) continue;
            std::vector<VitalSignSeries> augmented;
            for (std::size_t i = 0; i < series.size(); ++i) {
                const auto* label = std::get_if<vitalgen::ActionLabel>(&series[i].label);
                if (label && *label == a) augmented.push_back(m.augment(series[i], *target, seed + i));
            }
            if (augmented.empty()) fail(ErrorKind::not_found, "no field series for " + std::string(vitalgen::to_string(a)));
            const auto p = cvvitae::proximity_map(
                augmented, ref, z_scored ? cvvitae::ProximityScale::z_scored : cvvitae::ProximityScale::raw);
            const auto scores = p.scores();
            csv << vitalgen::to_string(a) << ',' << vitalgen::to_string(*target);
            json row = {{"action", std::string(vitalgen::to_string(a))},
                        {"target", std::string(vitalgen::to_string(*target))},
                        {"nearest", std::string(vitalgen::to_string(p.nearest()))}};
            for (Eigen::Index c = 0; c < scores.size(); ++c) {
                csv << ',' << vitalgen::format_double(scores[c]);
                row["scores"][std::string(vitalgen::to_string(vitalgen::kAllClinical[c]))] = scores[c];
            }
            csv << ',' << vitalgen::to_string(p.nearest()) << '\n';
            report.push_back(row);
        }
        csv.close();
        write_json(report, out / "proximity.json");
        print_result(out, {{"rows", report}});
    }
};

// resync ----------------------------------------------------------------------

struct Resync {
    Common common;
    std::string detections;
    std::string frames;
    double fps = 1.0;
    std::string truth;
    std::string subjects;
    std::string sensors;
    std::string model;
    int height = 16;
    int width = 8;
    tracksync::SyncParams params;

    void attach(Options& o) {
        o.add("--detections", detections, "Detection stream (NDJSON)")->required();
        o.add("--frames", frames, "Directory of frame_NNNNNN.ppm images")->required();
        o.add("--fps", fps, "Frame rate of the image directory");
        o.add("--truth", truth, "detection,truth_id CSV; reports identity recovery");
        o.add("--subjects", subjects, "scene.json whose persons map truth ids to subjects");
        o.add("--sensors", sensors, "Directory of <subject_id>.csv streams");
        o.add("--model", model, "Fusion checkpoint; with --sensors and --subjects writes a session");
        o.add("--height", height, "Clip height");
        o.add("--width", width, "Clip width");
        o.add("--max-gap", params.max_gap_frames, "Frames a track may stay unobserved");
        o.add("--gate-radius", params.gate_radius, "Association gate in pixels");
    }

    void run(RunDir& out) const {
        out.add_input("detections", detections);
        out.add_input("frames", frames);
        const auto stream = tracksync::read_detections(fs::path(detections));
        const auto tracks = tracksync::resynchronize(stream, params);
        {
            std::ofstream csv(out / "tracks.csv");
            csv << "detection,frame,person_id\n";
            for (std::size_t i = 0; i < stream.size(); ++i)
                csv << i << ',' << stream[i].frame << ',' << tracks.person_of[i] << '\n';
        }
        const tracksync::ImageDirectorySource source(frames, fps);
        const tracksync::ClipGeometry g{source.frame_count(), height, width};
        const auto clips = tracksync::crop_clips(source, tracks, g, 0);
        for (const auto& c : clips) tracksync::write_clip(c, out / "clips" / ("person_" + std::to_string(c.person_id)));

        json result = {{"persons", tracks.persons.size()}, {"detections", stream.size()}};
        std::vector<int> truth_ids;
        if (!truth.empty()) {
            out.add_input("truth", truth);
            truth_ids = read_truth(truth, stream.size());
            const double recovery = tracksync::identity_recovery(tracks, truth_ids);
            result["identity_recovery"] = recovery;
        }
        if (!subjects.empty()) {
            if (truth_ids.empty()) fail(ErrorKind::config, "--subjects needs --truth");
            out.add_input("subjects", subjects);
            const auto mapping = enroll(tracks, truth_ids, subjects);
            tracksync::write_manifest(mapping, out / "manifest.csv");
            if (!model.empty() && !sensors.empty()) {
                out.add_input("model", model);
                out.add_input("sensors", sensors);
                std::vector<VitalSignSeries> streams;
                for (const auto& [person, subject] : mapping) {
                    (void)person;
                    streams.push_back(vitalgen::read_csv(fs::path(sensors) / (subject + ".csv")));
                }
                gateway::write_session(out / "session", model, clips, streams, mapping);
                result["session"] = (out / "session").generic_string();
            }
        }
        write_json(result, out / "resync.json");
        print_result(out, result);
    }

    static std::vector<int> read_truth(const fs::path& path, std::size_t n) {
        std::ifstream in(path);
        if (!in) fail(ErrorKind::not_found, "cannot read " + path.string());
        std::string line;
        std::getline(in, line);
        std::vector<int> ids(n, 0);
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            std::size_t det = 0;
            int id = 0;
            if (std::sscanf(line.c_str(), "%zu,%d", &det, &id) != 2 || det >= n)
                fail(ErrorKind::parse, path.string() + ":" + std::to_string(lineno) + ": bad truth record");
            ids[det] = id;
        }
        return ids;
    }

    // Each canonical track takes the subject of the truth id most of its
    // detections carry. Stands in for an enrollment step.
    static tracksync::PersonSubjectMap enroll(const tracksync::TrackSet& tracks, const std::vector<int>& truth,
                                              const fs::path& scene_json) {
        std::ifstream in(scene_json);
        if (!in) fail(ErrorKind::not_found, "cannot read " + scene_json.string());
        json scene;
        try {
            scene = json::parse(in);
        } catch (const json::exception& e) {
            fail(ErrorKind::parse, scene_json.string() + ": " + e.what());
        }
        std::map<int, std::string> subject_of;
        for (const auto& p : scene.at("persons")) subject_of[p.at("truth_id").get<int>()] = p.at("subject_id");

        tracksync::PersonSubjectMap mapping;
        std::set<std::string> used;
        for (const auto& track : tracks.persons) {
            std::map<int, int> votes;
            for (const auto& o : track.observations) ++votes[truth[o.detection]];
            const auto best = std::max_element(votes.begin(), votes.end(),
                                               [](const auto& a, const auto& b) { return a.second < b.second; });
            const auto it = subject_of.find(best->first);
            if (it == subject_of.end() || !used.insert(it->second).second) continue;
            mapping.emplace_back(track.person_id, it->second);
        }
        return mapping;
    }
};

// fusion training, evaluation and explanation ---------------------------------

struct FusionOptions {
    std::string mask = "all";
    int epochs = 20;
    int batch = 4;
    double lr = 1e-4;
    double dropout = 0.5;
    std::uint64_t seed = 1;
    std::uint64_t split_seed = 1;
    double test_fraction = 0.2;
    bool no_flip = false;

    void attach(Options& o, bool with_mask) {
        if (with_mask) o.add("--mask", mask, "Modality mask, e.g. all, video+hr, br+posture");
        o.add("--epochs", epochs, "Training epochs");
        o.add("--batch", batch, "Batch size");
        o.add("--lr", lr, "Adam learning rate");
        o.add("--dropout", dropout, "Head dropout probability");
        o.add("--seed", seed, "Training seed");
        o.add("--split-seed", split_seed, "Seed of the stratified train/test split");
        o.add("--test-fraction", test_fraction, "Held-out fraction per class");
        o.flag("--no-flip", no_flip, "Disable horizontal flip augmentation");
    }

    fusion::FusionConfig config(const std::vector<fusion::FusionSample>& samples) const {
        if (samples.empty()) fail(ErrorKind::not_found, "no samples");
        fusion::FusionConfig c;
        c.geometry = samples.front().clip.geometry;
        c.clip_fps = samples.front().clip.fps;
        c.mask = fusion::parse_mask(mask);
        c.epochs = epochs;
        c.batch_size = batch;
        c.learning_rate = lr;
        c.dropout = dropout;
        c.seed = seed;
        c.flip_augment = !no_flip;
        fusion::validate(c);
        return c;
    }
};

struct TrainFusion {
    Common common;
    std::string samples;
    FusionOptions fo;

    void attach(Options& o) {
        o.add("--samples", samples, "Fusion sample directory")->required();
        fo.attach(o, true);
    }

    void run(RunDir& out) const {
        out.add_input("samples", samples);
        out.set_seed("seed", fo.seed);
        out.set_seed("split_seed", fo.split_seed);
        const auto all = fusion::read_samples(samples);
        const auto config = fo.config(all);
        const auto split = fusion::split_samples(all, fo.test_fraction, fo.split_seed);
        auto result = fusion::train_fusion(split.train, config);
        result.model.save(out / "model.ckpt");
        fusion::write_loss_history_csv(result.history, out / "history.csv");
        const auto report = result.model.complexity(static_cast<int>(all.front().sensors.timesteps()));
        std::ofstream(out / "complexity.txt") << report.to_text();
        const auto eval = fusion::evaluate(result.model, split.test);
        fusion::write_confusion_csv(eval, out / "confusion.csv");
        auto metrics = evaluation_json(eval);
        metrics["parameters"] = report.parameters;
        metrics["macs"] = report.macs;
        write_json(metrics, out / "metrics.json");
        print_result(out, {{"accuracy", eval.accuracy}, {"n_test", eval.total}});
    }
};

struct Evaluate {
    Common common;
    std::string model;
    std::string samples;
    bool all = false;
    std::uint64_t split_seed = 1;
    double test_fraction = 0.2;

    void attach(Options& o) {
        o.add("--model", model, "Fusion checkpoint")->required();
        o.add("--samples", samples, "Fusion sample directory")->required();
        o.flag("--all", all, "Evaluate every sample instead of the held-out split");
        o.add("--split-seed", split_seed, "Seed of the stratified train/test split");
        o.add("--test-fraction", test_fraction, "Held-out fraction per class");
    }

    void run(RunDir& out) const {
        out.add_input("model", model);
        out.add_input("samples", samples);
        const auto m = fusion::FusionModel::load(model);
        auto set = fusion::read_samples(samples);
        if (!all) set = fusion::split_samples(set, test_fraction, split_seed).test;
        const auto eval = fusion::evaluate(m, set);
        fusion::write_confusion_csv(eval, out / "confusion.csv");
        write_json(evaluation_json(eval), out / "metrics.json");
        print_result(out, {{"accuracy", eval.accuracy}, {"n_test", eval.total}});
    }
};

struct Ablate {
    Common common;
    std::string samples;
    std::string augmented;
    FusionOptions fo;

    void attach(Options& o) {
        o.add("--samples", samples, "Fusion sample directory")->required();
        o.add("--augmented", augmented, "Same samples with augmented injury sensors; adds the (w) row");
        fo.attach(o, false);
    }

    void run(RunDir& out) const {
        out.add_input("samples", samples);
        out.set_seed("seed", fo.seed);
        out.set_seed("split_seed", fo.split_seed);
        const auto raw = fusion::read_samples(samples);
        fusion::AblationInputs inputs{fusion::split_samples(raw, fo.test_fraction, fo.split_seed), nullptr};
        fusion::Split aug;
        if (!augmented.empty()) {
            out.add_input("augmented", augmented);
            aug = fusion::split_samples(fusion::read_samples(augmented), fo.test_fraction, fo.split_seed);
            inputs.augmented = &aug;
        }
        json rows = json::array();
        const auto result = fusion::ablate(inputs, fo.config(raw), [&](const fusion::AblationRow& r) {
            const json row = {{"mask", r.name}, {"accuracy", r.accuracy}, {"n_test", r.n_test},
                              {"invariance", r.invariance_holds}};
            std::cerr << row.dump() << std::endl;
            rows.push_back(row);
        });
        fusion::write_ablation_csv(result, out / "ablation.csv");
        write_json(rows, out / "ablation.json");
        print_result(out, {{"rows", result.size()}});
    }
};

struct Explain {
    Common common;
    std::string model;
    std::string samples;
    std::size_t index = 0;
    std::string target;

    void attach(Options& o) {
        o.add("--model", model, "Fusion checkpoint")->required();
        o.add("--samples", samples, "Fusion sample directory")->required();
        o.add("--index", index, "Sample index in directory order");
        o.add("--target", target, "Class to explain; defaults to the prediction");
    }

    void run(RunDir& out) const {
        out.add_input("model", model);
        out.add_input("samples", samples);
        const auto m = fusion::FusionModel::load(model);
        const auto set = fusion::read_samples(samples);
        if (index >= set.size())
            fail(ErrorKind::config, "--index " + std::to_string(index) + " out of range (" +
                                        std::to_string(set.size()) + " samples)");
        const auto& sample = set[index];
        const auto prediction = m.predict(sample);
        auto cls = prediction.label;
        if (!target.empty()) {
            const auto parsed = vitalgen::parse_action(target);
            if (!parsed) fail(ErrorKind::config, "unknown action '" + target + "'");
            cls = *parsed;
        }
        const auto heat = fusion::grad_cam(m, sample, cls);
        fusion::write_heatmaps(heat, sample.clip, out / "heatmaps");
        json j = {{"index", index},
                  {"target", std::string(vitalgen::to_string(cls))},
                  {"predicted", std::string(vitalgen::to_string(prediction.label))},
                  {"max_raw", heat.max_raw},
                  {"channel_weights", std::vector<double>(heat.channel_weights.begin(), heat.channel_weights.end())}};
        if (sample.label) j["truth"] = std::string(vitalgen::to_string(*sample.label));
        write_json(j, out / "explain.json");
        print_result(out, {{"target", j["target"]}, {"predicted", j["predicted"]}});
    }
};

struct Complexity {
    Common common;
    int frames = 32;
    int height = 128;
    int width = 64;
    double fps = 1.0;

    void attach(Options& o) {
        o.add("--frames", frames, "Clip frames");
        o.add("--height", height, "Clip height");
        o.add("--width", width, "Clip width");
        o.add("--fps", fps, "Clip frame rate");
    }

    void run(RunDir& out) const {
        fusion::FusionConfig c;
        c.geometry = {frames, height, width};
        c.clip_fps = fps;
        fusion::validate(c);
        const fusion::FusionModel m(c);
        const auto report = m.complexity(static_cast<int>(std::ceil(frames / fps)));
        std::ofstream(out / "complexity.txt") << report.to_text();
        print_result(out, {{"parameters", report.parameters}, {"macs", report.macs}});
    }
};

// serve -----------------------------------------------------------------------

struct Serve {
    Common common;
    std::string session;
    std::string model;
    std::string address = "127.0.0.1";
    unsigned short port = 7878;
    double speed = 1.0;
    double loss_rate = 0.0;
    std::uint64_t seed = 0;
    double period = 1.0;
    unsigned wait_clients = 1;
    std::string log;
    std::string severity_map;
    bool exit_after_replay = false;

    void attach(Options& o) {
        o.add("--session", session, "Session directory")->required();
        o.add("--model", model, "Fusion checkpoint overriding the session's");
        o.add("--address", address, "Listen address");
        o.add("--port", port, "Listen port (0 picks one)");
        o.add("--speed", speed, "Replay speed multiplier");
        o.add("--loss-rate", loss_rate, "Telemetry packet loss probability");
        o.add("--seed", seed, "Packet-loss seed");
        o.add("--period", period, "Stream seconds between window evaluations");
        o.add("--wait-clients", wait_clients, "Clients to wait for before replay starts");
        o.add("--log", log, "Decision log path (default: <run>/decisions.ndjson)");
        o.add("--severity-map", severity_map, "action=severity,... overrides");
        o.flag("--exit-after-replay", exit_after_replay, "Stop once the replay has ended");
    }

    void run(RunDir& out) const {
        out.add_input("session", session);
        out.set_seed("loss_seed", seed);
        auto s = gateway::load_session(session);
        if (!model.empty()) {
            out.add_input("model", model);
            auto m = fusion::FusionModel::load(model);
            for (const auto& p : s.persons) {
                const auto& g = m.config().geometry;
                if (g.height != p.clip.geometry.height || g.width != p.clip.geometry.width)
                    fail(ErrorKind::shape, "model clip resolution differs from the session clips");
            }
            s.model = std::move(m);
        }
        auto severities = gateway::default_severity_map();
        if (!severity_map.empty()) severities = gateway::parse_severity_map(severity_map);
        const fs::path log_path = log.empty() ? out / "decisions.ndjson" : fs::path(log);
        gateway::DecisionLog decisions(log_path);
        gateway::Gateway gw(std::move(s), decisions, severities);

        boost::asio::io_context io;
        gateway::Server::Options opts;
        opts.address = address;
        opts.port = port;
        opts.replay = {speed, loss_rate, seed, period};
        opts.wait_for_clients = wait_clients;
        gateway::Server server(io, gw, opts);
        server.start();
        std::cout << json{{"event", "listening"}, {"port", server.port()}}.dump() << std::endl;

        boost::asio::signal_set signals(io, SIGINT, SIGTERM);
        signals.async_wait([&](const boost::system::error_code&, int) {
            server.stop();
            io.stop();
        });
        boost::asio::steady_timer poll(io);
        std::function<void()> watch = [&] {
            poll.expires_after(std::chrono::milliseconds(50));
            poll.async_wait([&](const boost::system::error_code& ec) {
                if (ec) return;
                if (exit_after_replay && server.replay_finished()) {
                    server.stop();
                    io.stop();
                    return;
                }
                watch();
            });
        };
        watch();
        io.run();

        decisions.export_audit(out / "audit.ndjson");
        print_result(out, {{"decisions", decisions.size()}, {"replay_finished", server.replay_finished()}});
    }
};

template <class Cmd>
void add_command(CLI::App& app, const std::string& name, const std::string& desc, Cmd& cmd,
                 std::function<void()>& action) {
    auto* sub = app.add_subcommand(name, desc);
    auto opts = std::make_shared<Options>(sub);
    cmd.attach(*opts);
    sub->add_option("--out", cmd.common.out, "Run directory (default: <runs>/<command>-<config digest>)");
    sub->add_option("--runs", cmd.common.runs, "Parent of default run directories")->capture_default_str();
    sub->callback([&cmd, opts, name, &action] {
        action = [&cmd, opts, name] {
            auto run = open_run(cmd.common, name, opts->config());
            cmd.run(run);
            run.finish();
        };
    });
}

int report_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
    return 1;
}

int main_impl(int argc, char** argv) {
    CLI::App app{"Casualty triage pipeline: data, training, explanation and replay gateway"};
    app.set_config("--config", "", "TOML/INI file with [subcommand] sections; command-line values win");
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    GenData gen;
    TrainCvvitae train_cv;
    Augment augment;
    ProximityReport proximity;
    Resync resync;
    TrainFusion train_fusion;
    Evaluate evaluate;
    Ablate ablate;
    Explain explain;
    Complexity complexity;
    Serve serve;
    std::function<void()> action;
    add_command(app, "gen-data", "Generate sensor corpora, fusion samples and a replay scene", gen, action);
    add_command(app, "train-cvvitae", "Train the conditional sensor VAE on the clinical reference", train_cv, action);
    add_command(app, "augment", "Augment injury-class sensor streams of fusion samples", augment, action);
    add_command(app, "proximity-report", "Score augmented field series against clinical classes", proximity,
                action);
    add_command(app, "resync", "Re-identify persons in a detection stream and crop their clips", resync, action);
    add_command(app, "train-fusion", "Train the fusion classifier on a stratified split", train_fusion, action);
    add_command(app, "evaluate", "Evaluate a fusion checkpoint", evaluate, action);
    add_command(app, "ablate", "Train and test every modality mask", ablate, action);
    add_command(app, "explain", "Grad-CAM heatmaps for one sample", explain, action);
    add_command(app, "complexity", "Parameter and MAC counts of a fusion configuration", complexity, action);
    add_command(app, "serve", "Replay a session to operator consoles", serve, action);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        action();
    } catch (const Error& e) {
        return report_error(std::string(to_string(e.kind())), e.what());
    } catch (const std::exception& e) {
        return report_error("internal", e.what());
    }
    return 0;
}

}  // namespace
}  // namespace atract::cli

int main(int argc, char** argv) { return atract::cli::main_impl(argc, argv); }
