#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"

#include "../support/gradcheck.hpp"
#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"
#include "atract/cvvitae/mapping.hpp"
#include "atract/cvvitae/model.hpp"
#include "atract/cvvitae/proximity.hpp"
#include "atract/vitalgen/generator.hpp"

using namespace atract;
using namespace atract::cvvitae;
using vitalgen::ActionLabel;
using vitalgen::ClinicalLabel;
using vitalgen::VitalSignSeries;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

std::vector<VitalSignSeries> reference(std::uint64_t seed, int per_class, int t) {
    auto spec = vitalgen::default_clinical_spec();
    spec.seed = seed;
    spec.per_class = per_class;
    spec.timesteps = t;
    return vitalgen::generate_clinical_reference(spec);
}

// Monte-Carlo estimate of E_q[log q(z) - log p(z)] with its standard error.
std::pair<double, double> monte_carlo_kl(const LatentDistribution& d, int draws, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < draws; ++k) {
        double log_ratio = 0.0;
        for (Eigen::Index i = 0; i < d.mu.size(); ++i) {
            const double e = n(rng);
            const double z = d.mu[i] + std::exp(0.5 * d.log_var[i]) * e;
            log_ratio += -0.5 * d.log_var[i] - 0.5 * e * e + 0.5 * z * z;
        }
        sum += log_ratio;
        sq += log_ratio * log_ratio;
    }
    const double mean = sum / draws;
    const double var = sq / draws - mean * mean;
    return {mean, std::sqrt(var / draws)};
}

}  // namespace

TEST_CASE("reparameterize follows the affine formula") {
    const LatentDistribution d{Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Zero(1)};
    CHECK(reparameterize(d, Eigen::VectorXd::Zero(1)).z[0] == 0.2);
    CHECK(reparameterize(d, Eigen::VectorXd::Ones(1)).z[0] == doctest::Approx(1.2));
    const LatentDistribution d4{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, std::log(4.0))};
    CHECK(reparameterize(d4, Eigen::VectorXd::Ones(1)).z[0] == doctest::Approx(2.0));
    CHECK_THROWS_AS(reparameterize(d, Eigen::VectorXd::Ones(2)), Error);
}

TEST_CASE("reparameterize is affine in the noise") {
    auto rng = substream(11, {});
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const LatentDistribution d{gaussian(5, 1, rng).col(0), gaussian(5, 1, rng).col(0)};
        const Eigen::VectorXd e1 = gaussian(5, 1, rng).col(0), e2 = gaussian(5, 1, rng).col(0);
        const double a = u(rng), b = u(rng);
        const Eigen::VectorXd lhs = reparameterize(d, a * e1 + b * e2).z;
        const Eigen::VectorXd rhs =
            a * reparameterize(d, e1).z + b * reparameterize(d, e2).z - (a + b - 1.0) * d.mu;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("reconstruction loss against a direct sum") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
    CHECK(reconstruction_loss(x, x) == 0.0);
    CHECK(reconstruction_loss(x, x.array() + 1.0) == doctest::Approx(1.0));

    auto rng = substream(12, {});
    const Eigen::MatrixXd a = gaussian(7, 5, rng), b = gaussian(7, 5, rng);
    double sum = 0.0;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j) sum += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    CHECK(std::abs(reconstruction_loss(a, b) - sum / 35.0) < 1e-12);
    CHECK_THROWS_AS(reconstruction_loss(a, b.leftCols(2)), Error);
}

TEST_CASE("kl loss closed form and sign") {
    CHECK(kl_loss({Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)}) == 0.0);
    CHECK(kl_loss({Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)}) == doctest::Approx(0.5));
    auto rng = substream(13, {});
    for (int trial = 0; trial < 200; ++trial) {
        const LatentDistribution d{gaussian(4, 1, rng).col(0), gaussian(4, 1, rng, 2.0).col(0)};
        CHECK(kl_loss(d) >= 0.0);
    }
    // near-zero log variance stays accurate
    CHECK(kl_loss({Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 1e-9)}) ==
          doctest::Approx(0.25e-18).epsilon(1e-6));
}

TEST_CASE("kl loss agrees with a Monte-Carlo estimate") {
    auto rng = substream(14, {});
    for (int trial = 0; trial < 3; ++trial) {
        const LatentDistribution d{gaussian(3, 1, rng).col(0), gaussian(3, 1, rng, 0.5).col(0)};
        const auto [mc, se] = monte_carlo_kl(d, 200000, rng);
        CHECK(std::abs(mc - kl_loss(d)) < 3.0 * se);
    }
}

TEST_CASE("cross entropy and total loss composition") {
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(4, 2);
    onehot(0, 0) = 1.0;
    onehot(3, 1) = 1.0;
    CHECK(cross_entropy(onehot, {ClinicalLabel::bleeding, ClinicalLabel::baseline_healthy}) == 0.0);
    const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(4, 3, 0.25);
    CHECK(cross_entropy(uniform, {ClinicalLabel::bleeding, ClinicalLabel::brain_injury,
                                  ClinicalLabel::cardiac_arrest}) == doctest::Approx(std::log(4.0)));

    auto rng = substream(15, {});
    const Eigen::MatrixXd p = softmax(gaussian(4, 5, rng));
    std::vector<ClinicalLabel> labels;
    double sum = 0.0;
    for (int b = 0; b < 5; ++b) {
        labels.push_back(vitalgen::kAllClinical[static_cast<std::size_t>(b % 4)]);
        sum += -std::log(p(b % 4, b));
    }
    CHECK(std::abs(cross_entropy(p, labels) - sum / 5.0) < 1e-10);

    CHECK(total_loss(2.0, 0.0, 3.0, 1.0).total == 5.0);
    CHECK(total_loss(2.0, 7.0, 3.0, 0.0).total == 3.0);
    CHECK(total_loss(3.0, 1.0, 1.0, 0.5).total == 3.0);
    CHECK_THROWS_AS(total_loss(1.0, 1.0, 1.0, -0.1), Error);
}

TEST_CASE("analytic cvvitae gradients match finite differences") {
    CvvitaeConfig cfg;
    cfg.latent_dim = 2;
    cfg.latent_steps = 2;
    cfg.hidden = 5;
    cfg.regularizer_hidden = 3;
    cfg.alpha = 0.7;
    Cvvitae model(cfg, 8);
    model.init(3);
    const auto corpus = reference(3, 1, 8);
    model.fit_standardization(corpus);

    auto rng = substream(16, {});
    Batch batch;
    batch.x.resize(8 * 4, 4);
    for (std::size_t b = 0; b < 4; ++b) {
        batch.x.col(static_cast<Eigen::Index>(b)) = model.to_model_space(corpus[b]);
        batch.labels.push_back(std::get<ClinicalLabel>(corpus[b].label));
    }
    batch.eps = gaussian(2, 4, rng);

    auto params = model.parameters();
    nn::zero_grads(params);
    const auto l = model.compute_losses(batch, true);
    CHECK(l.total == cfg.alpha * (l.reconstruction + l.kl) + l.regularizer);
    const auto analytic = testing::snapshot_grads(params);
    const auto res = testing::check_gradients(
        params, [&] { return model.compute_losses(batch, false).total; }, analytic);
    CHECK_MESSAGE(res.worst_relative_error < 1e-4, res.worst_param);
}

TEST_CASE("shape and state errors") {
    CvvitaeConfig cfg;
    Cvvitae model(cfg, 10);
    const auto corpus = reference(1, 1, 12);
    CHECK_THROWS_AS(model.encode(corpus[0], ClinicalLabel::bleeding), Error);
    CHECK_THROWS_AS(model.decode({Eigen::VectorXd::Zero(3)}, ClinicalLabel::bleeding), Error);
    const auto ten = reference(1, 1, 10);
    CHECK_THROWS_AS(model.augment(ten[0], ClinicalLabel::bleeding, 1), Error);
    try {
        model.augment(ten[0], ClinicalLabel::bleeding, 1);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::state);
    }

    cfg.latent_steps = 3;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("training errors name the problem") {
    CHECK_THROWS_AS(train({}, {}), Error);
    auto corpus = reference(2, 2, 8);
    std::erase_if(corpus, [](const VitalSignSeries& s) {
        return std::get<ClinicalLabel>(s.label) == ClinicalLabel::brain_injury;
    });
    try {
        train(corpus, {});
        FAIL("expected a training error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::training);
        CHECK(std::string(e.what()).find("brain_injury") != std::string::npos);
    }
}

TEST_CASE("trained model reconstructs, conditions and is reproducible") {
    const auto corpus = reference(5, 40, 24);
    CvvitaeConfig cfg;
    cfg.seed = 5;
    const auto run = train(corpus, cfg);
    const auto again = train(corpus, cfg);
    REQUIRE(run.history.size() == 50);
    CHECK(run.history.front().total == again.history.front().total);
    CHECK(run.history.back().total == again.history.back().total);
    CHECK(run.history.back().reconstruction < 0.5 * run.history.front().reconstruction);

    auto model = run.model;
    CHECK(model.trained());
    const auto& x = corpus[0];
    const auto d1 = model.encode(x, ClinicalLabel::bleeding);
    const auto d2 = model.encode(x, ClinicalLabel::bleeding);
    CHECK(d1.mu == d2.mu);
    CHECK(d1.mu.size() == 16);
    CHECK(model.encode(x, ClinicalLabel::cardiac_arrest).mu != d1.mu);
    CHECK(model.decode({d1.mu}, ClinicalLabel::bleeding).rows() == 24);

    // held-out reconstruction improves over the untrained model
    const auto held_out = reference(77, 5, 24);
    Cvvitae untrained(cfg, 24);
    untrained.init(cfg.seed);
    untrained.fit_standardization(corpus);
    CHECK(evaluate(model, held_out, 1).reconstruction < evaluate(untrained, held_out, 1).reconstruction);

    const auto a = model.augment(x, ClinicalLabel::cardiac_arrest, 9, {.noise_scale = 1.0});
    const auto b = model.augment(x, ClinicalLabel::cardiac_arrest, 9, {.noise_scale = 1.0});
    CHECK(a == b);
    CHECK(std::get<ClinicalLabel>(a.label) == ClinicalLabel::cardiac_arrest);
    CHECK(a.subject_id == x.subject_id);
    CHECK_NOTHROW(vitalgen::validate(a));

    const auto path = std::filesystem::temp_directory_path() / "atract_cvvitae.ckpt";
    model.save(path);
    const auto loaded = Cvvitae::load(path);
    CHECK(loaded.trained());
    CHECK(loaded.encode(x, ClinicalLabel::bleeding).mu == d1.mu);
    std::filesystem::remove(path);
}

TEST_CASE("proximity map formula cases and oracle") {
    const auto ref = reference(6, 3, 10);
    // class means by hand
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(4, 4);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(4);
    for (const auto& s : ref) {
        const auto c = static_cast<Eigen::Index>(vitalgen::index(std::get<ClinicalLabel>(s.label)));
        for (Eigen::Index t = 0; t < s.samples.rows(); ++t) {
            for (Eigen::Index j = 0; j < 4; ++j) means(j, c) += s.samples(t, j);
            counts[c] += 1.0;
        }
    }
    for (Eigen::Index c = 0; c < 4; ++c) means.col(c) /= counts[c];

    VitalSignSeries flat;
    flat.samples = means.col(1).transpose().replicate(10, 1);
    flat.label = ClinicalLabel::cardiac_arrest;
    auto pm = proximity_map({flat}, ref);
    CHECK(pm.m.col(1).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(pm.nearest() == ClinicalLabel::cardiac_arrest);

    VitalSignSeries shifted = flat;
    shifted.samples.array() += 0.75;
    pm = proximity_map({shifted}, ref);
    CHECK((pm.m.col(1).array() - 0.75).abs().maxCoeff() < 1e-9);

    // brute-force double loop over random augmented sets
    auto rng = substream(17, {});
    std::vector<VitalSignSeries> aug;
    for (int k = 0; k < 4; ++k) {
        VitalSignSeries s;
        s.samples = gaussian(6 + k, 4, rng, 10.0);
        aug.push_back(s);
    }
    pm = proximity_map(aug, ref);
    for (Eigen::Index j = 0; j < 4; ++j) {
        for (Eigen::Index c = 0; c < 4; ++c) {
            double acc = 0.0;
            for (const auto& s : aug) {
                double sum = 0.0;
                for (Eigen::Index t = 0; t < s.samples.rows(); ++t) sum += s.samples(t, j) - means(j, c);
                acc += sum / static_cast<double>(s.samples.rows());
            }
            CHECK(std::abs(pm.m(j, c) - acc / 4.0) < 1e-12 * std::max(1.0, std::abs(acc)));
        }
    }
    const auto z = proximity_map(aug, ref, ProximityScale::z_scored);
    CHECK(z.m.allFinite());
    CHECK((z.m.array().sign() == pm.m.array().sign()).all());

    auto missing = ref;
    std::erase_if(missing, [](const VitalSignSeries& s) {
        return std::get<ClinicalLabel>(s.label) == ClinicalLabel::bleeding;
    });
    CHECK_THROWS_AS(proximity_map(aug, missing), Error);
    VitalSignSeries narrow;
    narrow.samples = Eigen::MatrixXd::Zero(5, 3);
    CHECK_THROWS_AS(proximity_map({narrow}, ref), Error);
}

TEST_CASE("action to clinical mapping") {
    CHECK(action_to_clinical(ActionLabel::arm_injury) == ClinicalLabel::bleeding);
    CHECK(action_to_clinical(ActionLabel::walk_collapse) == ClinicalLabel::cardiac_arrest);
    CHECK(action_to_clinical(ActionLabel::head_injury) == ClinicalLabel::brain_injury);
    CHECK_FALSE(action_to_clinical(ActionLabel::running).has_value());
    CHECK_FALSE(action_to_clinical(ActionLabel::crawling).has_value());
    CHECK_FALSE(action_to_clinical(ActionLabel::limping).has_value());
}
