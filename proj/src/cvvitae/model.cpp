#include "atract/cvvitae/model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"
#include "atract/nn/adam.hpp"
#include "atract/nn/checkpoint.hpp"
#include "atract/vitalgen/csv.hpp"

namespace atract::cvvitae {

using vitalgen::ClinicalLabel;
using vitalgen::kClinicalCount;
using vitalgen::VitalSignSeries;

namespace {

constexpr int kClasses = static_cast<int>(kClinicalCount);

Eigen::MatrixXd tanh_of(const Eigen::MatrixXd& a) { return a.array().tanh().matrix(); }

Eigen::MatrixXd tanh_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy) {
    return (dy.array() * (1.0 - y.array().square())).matrix();
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
    Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

nlohmann::json to_json(const CvvitaeConfig& c) {
    return {{"latent_dim", c.latent_dim},     {"latent_steps", c.latent_steps},
            {"hidden", c.hidden},             {"regularizer_hidden", c.regularizer_hidden},
            {"alpha", c.alpha},               {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},             {"batch_size", c.batch_size},
            {"seed", c.seed}};
}

CvvitaeConfig config_from_json(const nlohmann::json& j) {
    CvvitaeConfig c;
    c.latent_dim = j.at("latent_dim");
    c.latent_steps = j.at("latent_steps");
    c.hidden = j.at("hidden");
    c.regularizer_hidden = j.at("regularizer_hidden");
    c.alpha = j.at("alpha");
    c.learning_rate = j.at("learning_rate");
    c.epochs = j.at("epochs");
    c.batch_size = j.at("batch_size");
    c.seed = j.at("seed");
    return c;
}

}  // namespace

void validate(const CvvitaeConfig& c) {
    if (c.latent_dim < 1) fail(ErrorKind::config, "latent_dim must be >= 1");
    if (c.latent_steps < 1 || c.latent_dim % c.latent_steps != 0)
        fail(ErrorKind::config, "latent_steps must divide latent_dim");
    if (c.hidden < 1 || c.regularizer_hidden < 1) fail(ErrorKind::config, "hidden sizes must be >= 1");
    if (c.alpha < 0.0) fail(ErrorKind::config, "alpha must be >= 0");
    if (!(c.learning_rate > 0.0)) fail(ErrorKind::config, "learning_rate must be > 0");
    if (c.epochs < 0 || c.batch_size < 1) fail(ErrorKind::config, "epochs/batch_size invalid");
}

Cvvitae::Cvvitae(const CvvitaeConfig& config, int timesteps, int channels)
    : config_(config), timesteps_(timesteps), channels_(channels) {
    validate(config_);
    if (timesteps < 1 || channels < 1) fail(ErrorKind::config, "cvvitae: empty input shape");
    const int in = timesteps * channels;
    enc_hidden_ = nn::Linear("encoder.hidden", in + kClasses, config.hidden);
    enc_mu_ = nn::Linear("encoder.mu", config.hidden, config.latent_dim);
    enc_log_var_ = nn::Linear("encoder.log_var", config.hidden, config.latent_dim);
    dec_hidden_ = nn::Linear("decoder.hidden", config.latent_dim + kClasses, config.hidden);
    dec_out_ = nn::Linear("decoder.out", config.hidden, in);
    reg_rnn_ = nn::Lstm("regularizer.rnn", config.latent_dim / config.latent_steps,
                        config.regularizer_hidden);
    reg_out_ = nn::Linear("regularizer.out", config.regularizer_hidden, kClasses);
    mean_ = nn::Param("standardize.mean", channels, 1);
    std_ = nn::Param("standardize.std", channels, 1);
    std_.value.setOnes();
}

void Cvvitae::init(std::uint64_t seed) {
    auto rng = substream(seed, {0xC5A1});
    enc_hidden_.init(rng);
    enc_mu_.init(rng);
    enc_log_var_.init(rng);
    dec_hidden_.init(rng);
    dec_out_.init(rng);
    reg_rnn_.init(rng);
    reg_out_.init(rng);
}

void Cvvitae::fit_standardization(const std::vector<VitalSignSeries>& corpus) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(channels_);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(channels_);
    double n = 0.0;
    for (const auto& s : corpus) {
        sum += s.samples.colwise().sum().transpose();
        sq += s.samples.array().square().colwise().sum().matrix().transpose();
        n += static_cast<double>(s.samples.rows());
    }
    if (n == 0.0) return;
    const Eigen::VectorXd mean = sum / n;
    Eigen::VectorXd var = sq / n - mean.cwiseProduct(mean);
    mean_.value.col(0) = mean;
    std_.value.col(0) = var.cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-6);
}

Eigen::VectorXd Cvvitae::to_model_space(const VitalSignSeries& x) const {
    if (x.samples.rows() != timesteps_ || x.samples.cols() != channels_) {
        std::ostringstream os;
        os << "cvvitae: series is " << x.samples.rows() << "x" << x.samples.cols()
           << ", model expects " << timesteps_ << "x" << channels_;
        fail(ErrorKind::shape, os.str());
    }
    Eigen::VectorXd v(timesteps_ * channels_);
    for (int t = 0; t < timesteps_; ++t)
        for (int d = 0; d < channels_; ++d)
            v[t * channels_ + d] = (x.samples(t, d) - mean_.value(d, 0)) / std_.value(d, 0);
    return v;
}

Eigen::MatrixXd Cvvitae::from_model_space(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd out(timesteps_, channels_);
    for (int t = 0; t < timesteps_; ++t)
        for (int d = 0; d < channels_; ++d)
            out(t, d) = v[t * channels_ + d] * std_.value(d, 0) + mean_.value(d, 0);
    return out;
}

Eigen::MatrixXd Cvvitae::condition(const std::vector<ClinicalLabel>& labels) const {
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(kClasses, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t b = 0; b < labels.size(); ++b)
        onehot(static_cast<Eigen::Index>(vitalgen::index(labels[b])), static_cast<Eigen::Index>(b)) = 1.0;
    return onehot;
}

std::vector<Eigen::MatrixXd> Cvvitae::latent_sequence(const Eigen::MatrixXd& z) const {
    const int chunk = config_.latent_dim / config_.latent_steps;
    std::vector<Eigen::MatrixXd> seq;
    for (int s = 0; s < config_.latent_steps; ++s) seq.push_back(z.middleRows(s * chunk, chunk));
    return seq;
}

LatentDistribution Cvvitae::encode(const VitalSignSeries& x, ClinicalLabel y) const {
    const Eigen::MatrixXd in = stack(to_model_space(x), condition({y}));
    const Eigen::MatrixXd h = tanh_of(enc_hidden_.forward(in));
    return {enc_mu_.forward(h).col(0), enc_log_var_.forward(h).col(0)};
}

Eigen::MatrixXd Cvvitae::decode(const LatentSample& z, ClinicalLabel y) const {
    if (z.z.size() != config_.latent_dim) fail(ErrorKind::shape, "decode: latent dimension mismatch");
    const Eigen::MatrixXd h = tanh_of(dec_hidden_.forward(stack(z.z, condition({y}))));
    return from_model_space(dec_out_.forward(h).col(0));
}

Eigen::MatrixXd Cvvitae::classify_latent(const Eigen::MatrixXd& z_batch) const {
    if (z_batch.rows() != config_.latent_dim)
        fail(ErrorKind::shape, "regularizer: latent dimension mismatch");
    return softmax(reg_out_.forward(reg_rnn_.forward(latent_sequence(z_batch), nullptr)));
}

double Cvvitae::regularizer_loss(const Eigen::MatrixXd& z_batch,
                                 const std::vector<ClinicalLabel>& labels) const {
    return cross_entropy(classify_latent(z_batch), labels);
}

LossBreakdown Cvvitae::compute_losses(const Batch& batch, bool accumulate) {
    const Eigen::Index bsz = batch.x.cols();
    const double alpha = config_.alpha;
    const Eigen::MatrixXd onehot = condition(batch.labels);

    const Eigen::MatrixXd enc_in = stack(batch.x, onehot);
    const Eigen::MatrixXd h1 = tanh_of(enc_hidden_.forward(enc_in));
    const Eigen::MatrixXd mu = enc_mu_.forward(h1);
    const Eigen::MatrixXd lv = enc_log_var_.forward(h1);
    const Eigen::MatrixXd sigma = (0.5 * lv.array()).exp().matrix();
    const Eigen::MatrixXd z = mu + sigma.cwiseProduct(batch.eps);

    const Eigen::MatrixXd dec_in = stack(z, onehot);
    const Eigen::MatrixXd h2 = tanh_of(dec_hidden_.forward(dec_in));
    const Eigen::MatrixXd x_hat = dec_out_.forward(h2);

    nn::LstmCache cache;
    const Eigen::MatrixXd reg_h = reg_rnn_.forward(latent_sequence(z), accumulate ? &cache : nullptr);
    const Eigen::MatrixXd probs = softmax(reg_out_.forward(reg_h));

    const double rec = reconstruction_loss(batch.x, x_hat);
    double kl = 0.0;
    for (Eigen::Index b = 0; b < bsz; ++b) kl += kl_loss({mu.col(b), lv.col(b)});
    kl /= static_cast<double>(bsz);
    const double reg = cross_entropy(probs, batch.labels);
    const auto losses = total_loss(rec, kl, reg, alpha);
    if (!accumulate) return losses;

    // reconstruction path
    const Eigen::MatrixXd dx_hat = (alpha * 2.0 / static_cast<double>(batch.x.size())) * (x_hat - batch.x);
    const Eigen::MatrixXd dh2 = tanh_backward(h2, dec_out_.backward(h2, dx_hat));
    const Eigen::MatrixXd ddec_in = dec_hidden_.backward(dec_in, dh2);
    Eigen::MatrixXd dz = ddec_in.topRows(config_.latent_dim);

    // regularizer path
    const Eigen::MatrixXd dlogits = (probs - onehot) / static_cast<double>(bsz);
    const Eigen::MatrixXd dreg_h = reg_out_.backward(reg_h, dlogits);
    const auto dseq = reg_rnn_.backward(cache, dreg_h);
    const int chunk = config_.latent_dim / config_.latent_steps;
    for (int s = 0; s < config_.latent_steps; ++s) dz.middleRows(s * chunk, chunk) += dseq[s];

    // reparameterization and KL
    const double kl_scale = alpha / static_cast<double>(bsz);
    const Eigen::MatrixXd dmu = dz + kl_scale * mu;
    const Eigen::MatrixXd dlv =
        (dz.array() * batch.eps.array() * 0.5 * sigma.array() +
         kl_scale * 0.5 * (lv.array().exp() - 1.0))
            .matrix();
    Eigen::MatrixXd dh1 = enc_mu_.backward(h1, dmu) + enc_log_var_.backward(h1, dlv);
    enc_hidden_.backward(enc_in, tanh_backward(h1, dh1));
    return losses;
}

VitalSignSeries Cvvitae::augment(const VitalSignSeries& x, ClinicalLabel target, std::uint64_t seed,
                                 AugmentOptions options) const {
    if (!trained_) fail(ErrorKind::state, "augment: model has not been trained");
    const auto d = encode(x, target);
    auto rng = substream(seed, {0xA06});
    Eigen::VectorXd eps = standard_normal(config_.latent_dim, 1, rng).col(0) * options.noise_scale;
    VitalSignSeries out;
    out.samples = decode(reparameterize(d, eps), target);
    vitalgen::clamp_to_range(out.samples);
    out.rate_hz = x.rate_hz;
    out.label = target;
    out.subject_id = x.subject_id;
    return out;
}

nn::ParamRefs Cvvitae::parameters() {
    nn::ParamRefs p;
    enc_hidden_.collect(p);
    enc_mu_.collect(p);
    enc_log_var_.collect(p);
    dec_hidden_.collect(p);
    dec_out_.collect(p);
    reg_rnn_.collect(p);
    reg_out_.collect(p);
    return p;
}

nn::ParamRefs Cvvitae::tensors() {
    auto p = parameters();
    p.push_back(&mean_);
    p.push_back(&std_);
    return p;
}

void Cvvitae::save(const std::filesystem::path& path) {
    nlohmann::json j = to_json(config_);
    j["timesteps"] = timesteps_;
    j["channels"] = channels_;
    j["trained"] = trained_;
    nn::write_checkpoint(path, "cvvitae", j.dump(), tensors());
}

Cvvitae Cvvitae::load(const std::filesystem::path& path) {
    const auto ckpt = nn::read_checkpoint(path);
    if (ckpt.kind != "cvvitae") fail(ErrorKind::parse, path.string() + ": not a cvvitae checkpoint");
    const auto j = nlohmann::json::parse(ckpt.config_json);
    Cvvitae model(config_from_json(j), j.at("timesteps"), j.at("channels"));
    nn::load_tensors(ckpt, model.tensors());
    model.trained_ = j.value("trained", false);
    return model;
}

namespace {

std::vector<ClinicalLabel> checked_labels(const std::vector<VitalSignSeries>& corpus) {
    if (corpus.empty()) fail(ErrorKind::training, "training corpus is empty");
    std::vector<ClinicalLabel> labels;
    std::array<int, kClinicalCount> counts{};
    for (const auto& s : corpus) {
        const auto* c = std::get_if<ClinicalLabel>(&s.label);
        if (!c) fail(ErrorKind::training, "series '" + s.subject_id + "' has no clinical label");
        labels.push_back(*c);
        ++counts[vitalgen::index(*c)];
    }
    for (auto c : vitalgen::kAllClinical)
        if (counts[vitalgen::index(c)] == 0)
            fail(ErrorKind::training,
                 "clinical class '" + std::string(vitalgen::to_string(c)) + "' missing from corpus");
    return labels;
}

Batch make_batch(const Cvvitae& model, const std::vector<VitalSignSeries>& corpus,
                 const std::vector<ClinicalLabel>& labels, const std::vector<std::size_t>& idx,
                 std::mt19937_64& rng) {
    Batch b;
    b.x.resize(model.timesteps() * model.channels(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        b.x.col(static_cast<Eigen::Index>(k)) = model.to_model_space(corpus[idx[k]]);
        b.labels.push_back(labels[idx[k]]);
    }
    b.eps = standard_normal(model.config().latent_dim, static_cast<Eigen::Index>(idx.size()), rng);
    return b;
}

}  // namespace

TrainResult train(const std::vector<VitalSignSeries>& corpus, const CvvitaeConfig& config) {
    validate(config);
    const auto labels = checked_labels(corpus);
    const auto t = static_cast<int>(corpus.front().samples.rows());
    const auto d = static_cast<int>(corpus.front().samples.cols());
    for (const auto& s : corpus)
        if (s.samples.rows() != t || s.samples.cols() != d)
            fail(ErrorKind::training, "training series differ in shape");

    TrainResult result{Cvvitae(config, t, d), {}};
    auto& model = result.model;
    model.init(config.seed);
    model.fit_standardization(corpus);
    auto params = model.parameters();
    nn::Adam adam(params, {.learning_rate = config.learning_rate});

    std::vector<std::size_t> order(corpus.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        auto shuffle_rng = substream(config.seed, {0x5F, static_cast<std::uint64_t>(epoch)});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        auto noise_rng = substream(config.seed, {0xE5, static_cast<std::uint64_t>(epoch)});

        LossBreakdown sum;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
            const auto batch = make_batch(model, corpus, labels, idx, noise_rng);
            nn::zero_grads(params);
            const auto l = model.compute_losses(batch, true);
            adam.step();
            sum.reconstruction += l.reconstruction;
            sum.kl += l.kl;
            sum.regularizer += l.regularizer;
            sum.total += l.total;
            ++batches;
        }
        result.history.push_back({sum.reconstruction / batches, sum.kl / batches,
                                  sum.regularizer / batches, sum.total / batches});
    }
    model.mark_trained();
    return result;
}

LossBreakdown evaluate(Cvvitae& model, const std::vector<VitalSignSeries>& corpus, std::uint64_t seed) {
    const auto labels = checked_labels(corpus);
    std::vector<std::size_t> idx(corpus.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = substream(seed, {0xE7});
    return model.compute_losses(make_batch(model, corpus, labels, idx, rng), false);
}

void write_history_csv(const std::vector<LossBreakdown>& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string());
    out << "epoch,reconstruction,kl,regularizer,total\n";
    for (std::size_t e = 0; e < history.size(); ++e) {
        const auto& l = history[e];
        out << e << ',' << vitalgen::format_double(l.reconstruction) << ','
            << vitalgen::format_double(l.kl) << ',' << vitalgen::format_double(l.regularizer) << ','
            << vitalgen::format_double(l.total) << '\n';
    }
}

}  // namespace atract::cvvitae
