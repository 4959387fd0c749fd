#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "../support/fusion_oracles.hpp"
#include "../support/gradcheck.hpp"
#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"
#include "atract/fusion/corpus.hpp"
#include "atract/fusion/gradcam.hpp"
#include "atract/fusion/train.hpp"
#include "atract/vitalgen/generator.hpp"

using namespace atract;
using namespace atract::fusion;
using vitalgen::ActionLabel;
using testing::cam_oracle;
using testing::random_sample;
using testing::tiny_config;

namespace {

FusionSample uniform_sample(const ClipGeometry& g, int steps, float value) {
    std::mt19937_64 rng(5);
    auto s = random_sample(g, steps, ActionLabel::running, rng);
    std::fill(s.clip.pixels.begin(), s.clip.pixels.end(), value);
    return s;
}

// Class-balanced random samples, `per_class` of each action.
std::vector<FusionSample> random_corpus(const ClipGeometry& g, int steps, int per_class, std::uint64_t seed) {
    auto rng = substream(seed, {1});
    std::vector<FusionSample> out;
    for (auto a : vitalgen::kAllActions)
        for (int i = 0; i < per_class; ++i) out.push_back(random_sample(g, steps, a, rng));
    return out;
}

FusionModel seeded(const FusionConfig& cfg, std::uint64_t seed) {
    FusionModel m(cfg);
    m.init(seed);
    return m;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("atract_fusion_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("embedding dimensions at the default configuration") {
    FusionConfig cfg;
    auto model = seeded(cfg, 1);
    std::mt19937_64 rng(2);
    const auto s = random_sample(cfg.geometry, 12, ActionLabel::limping, rng);
    REQUIRE(s.clip.pixels.size() == 32u * 128 * 64 * 3);
    const auto v = model.video_encode(s.clip);
    const auto e = model.sensor_encode(s.sensors, cfg.mask);
    CHECK(v.size() == 512);
    CHECK(e.size() == 128);
    const auto f = FusionModel::fuse(v, e);
    REQUIRE(f.size() == 640);
    CHECK(f.head(512) == v);
    CHECK(f.tail(128) == e);
    CHECK(v.allFinite());
    CHECK(model.video_encode(s.clip) == v);

    const auto p = model.classify(f);
    CHECK(p.logits.size() == 6);
    CHECK(std::abs(p.probabilities.sum() - 1.0) < 1e-6);
}

TEST_CASE("video encoder edge cases") {
    const auto cfg = tiny_config();
    const auto model = seeded(cfg, 3);
    const auto zero = uniform_sample(cfg.geometry, 5, 0.0f);
    CHECK(model.video_encode(zero.clip).allFinite());

    auto wrong = zero;
    wrong.clip.geometry = {4, 8, 8};
    wrong.clip.pixels.resize(wrong.clip.geometry.values());
    try {
        model.video_encode(wrong.clip);
        FAIL("expected a shape error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::shape);
    }
}

TEST_CASE("sensor encoder masking and errors") {
    const auto cfg = tiny_config();
    const auto model = seeded(cfg, 4);
    std::mt19937_64 rng(9);
    const auto s = random_sample(cfg.geometry, 7, ActionLabel::running, rng);
    for (const auto& mask : table_masks()) {
        if (!mask.any_sensor()) continue;
        auto perturbed = s.sensors;
        for (std::size_t c = 0; c < 4; ++c)
            if (!mask.channels[c]) perturbed.samples.col(static_cast<Eigen::Index>(c)).setConstant(1e6);
        CHECK(model.sensor_encode(perturbed, mask) == model.sensor_encode(s.sensors, mask));
    }
    ModalityMask hr_only = parse_mask("hr");
    auto changed = s.sensors;
    changed.samples(0, 0) += 1.0;
    CHECK(model.sensor_encode(changed, hr_only) != model.sensor_encode(s.sensors, hr_only));

    auto empty = s.sensors;
    empty.samples.resize(0, 4);
    CHECK_THROWS_AS(model.sensor_encode(empty, cfg.mask), Error);

    ModalityMask none;
    none.video = false;
    none.channels.fill(false);
    try {
        validate(none);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
    CHECK_THROWS_AS(parse_mask("video+ecg"), Error);
}

TEST_CASE("mask names and table order") {
    const auto masks = table_masks();
    REQUIRE(masks.size() == 13);
    CHECK(masks.front().name() == "video");
    CHECK(masks[3].name() == "movement");
    CHECK(masks.back().name() == "hr+br+posture+movement");
    for (const auto& m : masks) CHECK(parse_mask(m.name()) == m);
    CHECK(ModalityMask{}.name() == "video+hr+br+posture+movement");
    CHECK(parse_mask("all") == ModalityMask{});
}

TEST_CASE("classifier head: softmax, dropout and determinism") {
    auto cfg = tiny_config();
    cfg.dropout = 0.0;
    const auto model = seeded(cfg, 6);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd fused(9);
        for (auto& v : fused) v = n(rng);
        const auto p = model.classify(fused);
        CHECK(std::abs(p.probabilities.sum() - 1.0) < 1e-6);
        CHECK((p.probabilities.array() >= 0.0).all());
        CHECK(model.head(fused, true, 77) == model.head(fused, false, 0));
        CHECK(model.classify(fused).logits == p.logits);
    }

    const auto dropping = seeded(tiny_config(), 6);
    Eigen::VectorXd fused = Eigen::VectorXd::Ones(9);
    CHECK(dropping.head(fused, true, 5) == dropping.head(fused, true, 5));
    CHECK(dropping.head(fused, false, 0) == dropping.head(fused, false, 1));
}

TEST_CASE("argmax breaks ties toward the lowest class index") {
    Eigen::VectorXd logits = Eigen::VectorXd::Zero(6);
    CHECK(make_prediction(logits).label == ActionLabel::arm_injury);
    logits[2] = logits[4] = 1.0;
    CHECK(make_prediction(logits).label == ActionLabel::limping);
}

TEST_CASE("fusion gradients match central differences") {
    const auto cfg = tiny_config();
    auto model = seeded(cfg, 11);
    std::mt19937_64 rng(12);
    const auto a = random_sample(cfg.geometry, 5, ActionLabel::head_injury, rng);
    const auto b = random_sample(cfg.geometry, 5, ActionLabel::crawling, rng);
    const std::vector<const FusionSample*> batch{&a, &b};
    const std::vector<bool> flips{false, true};
    std::vector<FusionSample> both{a, b};
    model.fit_standardization(both);

    auto params = model.parameters();
    nn::zero_grads(params);
    model.loss(batch, flips, true, 99, true);
    const auto analytic = testing::snapshot_grads(params);
    const auto res = testing::check_gradients(params, [&] { return model.loss(batch, flips, true, 99, false); },
                                              analytic);
    CHECK_MESSAGE(res.worst_relative_error < 1e-4, res.worst_param);

    // every tensor gets gradient signal
    for (std::size_t k = 0; k < params.size(); ++k) CHECK_MESSAGE(analytic[k].norm() > 0.0, params[k]->name);
}

TEST_CASE("video-masked model skips the video branch in the gradient") {
    auto cfg = tiny_config();
    cfg.mask = parse_mask("hr+movement");
    auto model = seeded(cfg, 2);
    std::mt19937_64 rng(3);
    const auto a = random_sample(cfg.geometry, 4, ActionLabel::running, rng);
    auto params = model.parameters();
    nn::zero_grads(params);
    model.loss({&a}, {false}, false, 0, true);
    for (const auto* p : params)
        if (p->name.rfind("video.", 0) == 0) CHECK_MESSAGE(p->grad.norm() == 0.0, p->name);
}

TEST_CASE("Grad-CAM matches the per-channel oracle") {
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        auto cfg = tiny_config();
        cfg.geometry = {4, 8, 8};
        cfg.conv2_channels = 4;
        auto model = seeded(cfg, 100 + trial);
        model.mark_trained();
        auto rng = substream(trial, {0xCA});
        const auto target = vitalgen::kAllActions[trial % 6];
        const auto s = random_sample(cfg.geometry, 4, target, rng);

        const auto h = grad_cam(model, s, target);
        const auto oracle = cam_oracle(model, s, target);
        REQUIRE(h.raw.size() == oracle.size());
        double oracle_max = 0.0;
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(std::abs(h.raw[i] - oracle[i]) <= 1e-6);
            oracle_max = std::max(oracle_max, oracle[i]);
        }
        REQUIRE(h.values.size() == 4u * 8 * 8);
        for (int t = 0; t < h.frames; ++t)
            for (int y = 0; y < h.height; ++y)
                for (int x = 0; x < h.width; ++x) {
                    const double v = h.at(t, y, x);
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                    const double want = oracle_max > 0.0 ? oracle[(t / 2 * 4 + y / 2) * 4 + x / 2] / oracle_max : 0.0;
                    CHECK(std::abs(v - want) <= 1e-6);
                }
    }
}

TEST_CASE("Grad-CAM degenerate and error cases") {
    auto cfg = tiny_config();
    auto model = seeded(cfg, 8);
    const auto s = uniform_sample(cfg.geometry, 4, 0.5f);
    try {
        grad_cam(model, s, ActionLabel::running);
        FAIL("expected a state error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::state);
    }
    model.mark_trained();
    for (auto* p : model.parameters()) {
        if (p->name == "video.conv2.weight") p->value.setZero();
        if (p->name == "video.conv2.bias") p->value.setConstant(-1.0);
    }
    const auto h = grad_cam(model, s, ActionLabel::running);
    CHECK(h.max_raw == 0.0);
    for (double v : h.values) CHECK(v == 0.0);

    const auto dir = temp_dir("heat");
    write_heatmaps(h, s.clip, dir);
    CHECK(std::filesystem::exists(dir / "frame_003.ppm"));
    std::filesystem::remove_all(dir);

    cfg.mask = parse_mask("hr");
    auto blind = seeded(cfg, 8);
    blind.mark_trained();
    CHECK_THROWS_AS(grad_cam(blind, s, ActionLabel::running), Error);
}

TEST_CASE("complexity report enumerates parameters and MACs") {
    FusionConfig cfg;
    const auto model = seeded(cfg, 1);
    const auto r = model.complexity(32);
    const std::size_t conv1 = 3 * 27 * 16 + 16, conv2 = 16 * 27 * 32 + 32, proj = 32 * 512 + 512;
    const std::size_t lstm = 4 * 128 * (4 + 128) + 4 * 128, fc1 = 640 * 256 + 256, fc2 = 256 * 6 + 6;
    CHECK(r.parameters == conv1 + conv2 + proj + lstm + fc1 + fc2);
    auto copy = model;
    CHECK(r.parameters == nn::count_parameters(copy.parameters()));
    CHECK(r.parameters <= 17'000'000u);

    const std::size_t v1 = 32ul * 128 * 64, v2 = 16ul * 64 * 32;
    const std::size_t macs = v1 * 16 * 27 * 3 + v2 * 32 * 27 * 16 + 32 * 512 + 32ul * 4 * 128 * (4 + 128) +
                             640 * 256 + 256 * 6;
    CHECK(r.macs == macs);
    CHECK(r.to_text() == model.complexity(32).to_text());
    CHECK(r.to_text().find("parameters ") == 0);

    nn::Linear single("l", 7, 3);
    nn::ParamRefs refs;
    single.collect(refs);
    CHECK(nn::count_parameters(refs) == 7u * 3 + 3);
}

TEST_CASE("evaluation tally on a hand-counted fixture") {
    using A = ActionLabel;
    const std::vector<A> truth{A::arm_injury, A::arm_injury, A::head_injury, A::limping, A::limping,
                               A::walk_collapse, A::crawling, A::crawling, A::running, A::running};
    const std::vector<A> pred{A::arm_injury, A::head_injury, A::head_injury, A::limping, A::running,
                              A::walk_collapse, A::crawling, A::limping, A::running, A::running};
    const auto ev = tally(truth, pred);
    // 7 of 10 correct
    CHECK(ev.accuracy == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(ev.confusion(0, 1) == 1);
    CHECK(ev.confusion(2, 5) == 1);
    CHECK(ev.confusion(4, 2) == 1);
    CHECK(ev.confusion.row(0).sum() == 2);
    CHECK(ev.confusion.row(3).sum() == 1);
    CHECK(ev.confusion.sum() == 10);

    const auto perfect = tally(truth, truth);
    CHECK(perfect.accuracy == 1.0);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            if (r != c) CHECK(perfect.confusion(r, c) == 0);

    const auto path = std::filesystem::temp_directory_path() / "atract_confusion.csv";
    write_confusion_csv(ev, path);
    std::ifstream in(path);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "truth\\predicted,arm_injury,head_injury,limping,walk_collapse,crawling,running");
    CHECK(first == "arm_injury,1,1,0,0,0,0");
    std::filesystem::remove(path);

    CHECK_THROWS_AS(tally(truth, {A::running}), Error);
}

TEST_CASE("stratified split") {
    const auto corpus = random_corpus({4, 8, 4}, 3, 10, 1);
    const auto split = split_samples(corpus, 0.2, 4);
    CHECK(split.train.size() == 48);
    CHECK(split.test.size() == 12);
    std::array<int, 6> per{};
    for (const auto& s : split.test) ++per[vitalgen::index(*s.label)];
    for (int n : per) CHECK(n == 2);
    const auto again = split_samples(corpus, 0.2, 4);
    for (std::size_t i = 0; i < split.test.size(); ++i) CHECK(again.test[i].clip.pixels == split.test[i].clip.pixels);
}

TEST_CASE("training: determinism, loss decrease, errors, checkpoint") {
    auto cfg = tiny_config();
    cfg.mask = parse_mask("hr+br+posture+movement");
    cfg.epochs = 50;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-3;
    auto spec = FusionCorpusSpec{};
    spec.geometry = cfg.geometry;
    spec.per_class = 6;
    spec.fps = 0.5;
    const auto corpus = generate_fusion_corpus(spec);
    const auto a = train_fusion(corpus, cfg);
    const auto b = train_fusion(corpus, cfg);
    REQUIRE(a.history.size() == 50);
    CHECK(a.history == b.history);
    CHECK(a.history.back() < a.history.front());
    CHECK(a.model.trained());

    const auto dir = temp_dir("ckpt");
    std::filesystem::create_directories(dir);
    auto model = a.model;
    model.save(dir / "fusion.ckpt");
    const auto loaded = FusionModel::load(dir / "fusion.ckpt");
    CHECK(loaded.trained());
    CHECK(loaded.config().mask == cfg.mask);
    for (const auto& s : corpus) CHECK(loaded.predict(s).logits == model.predict(s).logits);
    write_loss_history_csv(a.history, dir / "history.csv");
    std::ifstream hist(dir / "history.csv");
    std::string line;
    std::getline(hist, line);
    CHECK(line == "epoch,loss");
    std::filesystem::remove_all(dir);

    std::vector<FusionSample> missing;
    for (const auto& s : corpus)
        if (*s.label != ActionLabel::crawling) missing.push_back(s);
    try {
        train_fusion(missing, cfg);
        FAIL("expected a training error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::training);
        CHECK(std::string(e.what()).find("crawling") != std::string::npos);
    }
}

TEST_CASE("ablation harness rows and invariance") {
    auto cfg = tiny_config();
    cfg.epochs = 2;
    cfg.batch_size = 6;
    const auto corpus = random_corpus(cfg.geometry, 4, 3, 2);
    const auto split = split_samples(corpus, 0.34, 1);
    const auto rows = ablate({split, &split}, cfg);
    REQUIRE(rows.size() == 15);
    CHECK(rows[0].name == "video");
    CHECK(rows[13].name == "video+hr+br+posture+movement (w/o)");
    CHECK(rows[14].name == "video+hr+br+posture+movement (w)");
    for (const auto& r : rows) {
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
        CHECK(r.n_test == 6);
        CHECK_MESSAGE(r.invariance_holds, r.name);
    }
    CHECK(ablate({split, nullptr}, cfg).size() == 14);

    const auto path = std::filesystem::temp_directory_path() / "atract_ablation.csv";
    write_ablation_csv(rows, path);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    std::getline(in, line);
    CHECK(line == "mask,accuracy,n_test");
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 15);
    std::filesystem::remove(path);
}

TEST_CASE("synthetic fusion corpus") {
    FusionCorpusSpec spec;
    spec.geometry = {8, 16, 8};
    spec.per_class = 2;
    spec.fps = 0.5;
    const auto a = generate_fusion_corpus(spec);
    REQUIRE(a.size() == 12);
    CHECK(sensor_steps(spec) == 16);
    for (const auto& s : a) {
        CHECK(s.clip.pixels.size() == spec.geometry.values());
        CHECK(s.sensors.samples.rows() == 16);
        CHECK(std::get<ActionLabel>(s.sensors.label) == *s.label);
        vitalgen::validate(s.sensors);
    }
    const auto b = generate_fusion_corpus(spec);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].clip.pixels == b[i].clip.pixels);
        CHECK(a[i].sensors == b[i].sensors);
    }

    spec.ambiguous = true;
    const auto amb = generate_fusion_corpus(spec);
    // ambiguous arm injuries are drawn without the wound patch
    CHECK(amb[0].clip.pixels != a[0].clip.pixels);

    const auto dir = temp_dir("samples");
    write_samples(a, dir);
    const auto back = read_samples(dir);
    REQUIRE(back.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(back[i].label == a[i].label);
        CHECK(back[i].sensors.subject_id == a[i].sensors.subject_id);
        CHECK(back[i].clip.geometry == a[i].clip.geometry);
        CHECK(back[i].sensors.samples.isApprox(a[i].sensors.samples, 1e-9));
    }
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(read_samples(dir), Error);
}

TEST_CASE("sensor augmentation touches only mapped injury classes") {
    FusionCorpusSpec spec;
    spec.geometry = {4, 8, 4};
    spec.per_class = 2;
    spec.fps = 0.5;
    spec.ambiguous = true;
    const auto corpus = generate_fusion_corpus(spec);
    auto ref_spec = vitalgen::default_clinical_spec();
    ref_spec.per_class = 3;
    ref_spec.timesteps = sensor_steps(spec);
    cvvitae::CvvitaeConfig cc;
    cc.epochs = 2;
    const auto cv = cvvitae::train(vitalgen::generate_clinical_reference(ref_spec), cc);
    const auto aug = augment_sensors(corpus, cv.model, 3);
    REQUIRE(aug.size() == corpus.size());
    for (std::size_t i = 0; i < aug.size(); ++i) {
        const auto a = *corpus[i].label;
        CHECK(aug[i].label == corpus[i].label);
        CHECK(aug[i].clip.pixels == corpus[i].clip.pixels);
        const bool mapped = a == ActionLabel::arm_injury || a == ActionLabel::head_injury || a == ActionLabel::walk_collapse;
        CHECK((aug[i].sensors == corpus[i].sensors) == !mapped);
        CHECK(std::get<ActionLabel>(aug[i].sensors.label) == a);
    }
}
