#include "atract/fusion/model.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"
#include "atract/nn/checkpoint.hpp"
#include "atract/nn/softmax.hpp"

namespace atract::fusion {

namespace kp = kernels::parallel;
using vitalgen::ActionLabel;

namespace {

std::span<const double> cspan(const Eigen::MatrixXd& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<double> mspan(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

void relu_inplace(std::vector<double>& v) {
    for (auto& x : v) x = x > 0.0 ? x : 0.0;
}

kernels::Pool3dGeometry pool_of(const kernels::Conv3dGeometry& g) {
    return {g.out_channels, g.depth, g.height, g.width, 2};
}

}  // namespace

void validate(const FusionConfig& c) {
    const auto& g = c.geometry;
    if (g.frames < 4 || g.height < 4 || g.width < 4 || g.frames % 4 || g.height % 4 || g.width % 4)
        fail(ErrorKind::config, "clip frames, height and width must be positive multiples of 4");
    if (c.conv1_channels < 1 || c.conv2_channels < 1 || c.kernel < 1 || c.kernel % 2 == 0)
        fail(ErrorKind::config, "conv channels must be >= 1 and the kernel odd");
    if (!(c.clip_fps > 0.0)) fail(ErrorKind::config, "clip_fps must be > 0");
    if (c.video_dim < 1 || c.sensor_dim < 1 || c.head_hidden < 1) fail(ErrorKind::config, "layer sizes must be >= 1");
    if (c.dropout < 0.0 || c.dropout >= 1.0) fail(ErrorKind::config, "dropout must be in [0, 1)");
    if (!(c.learning_rate > 0.0)) fail(ErrorKind::config, "learning_rate must be > 0");
    if (c.epochs < 0 || c.batch_size < 1) fail(ErrorKind::config, "epochs/batch_size invalid");
    validate(c.mask);
}

Prediction make_prediction(const Eigen::VectorXd& logits) {
    Prediction p;
    p.logits = logits;
    p.probabilities = nn::softmax(logits);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    p.label = vitalgen::kAllActions[static_cast<std::size_t>(best)];
    return p;
}

std::string ComplexityReport::to_text() const {
    std::ostringstream os;
    os << "parameters " << parameters << '\n';
    for (const auto& [name, n] : parameter_breakdown) os << "  " << name << ' ' << n << '\n';
    os << "macs_per_clip " << macs << '\n';
    for (const auto& [name, n] : mac_breakdown) os << "  " << name << ' ' << n << '\n';
    return os.str();
}

FusionModel::FusionModel(const FusionConfig& config) : config_(config) {
    validate(config_);
    const int taps = config.kernel * config.kernel * config.kernel;
    conv1_w_ = nn::Param("video.conv1.weight", 3 * taps, config.conv1_channels);
    conv1_b_ = nn::Param("video.conv1.bias", config.conv1_channels, 1);
    conv2_w_ = nn::Param("video.conv2.weight", config.conv1_channels * taps, config.conv2_channels);
    conv2_b_ = nn::Param("video.conv2.bias", config.conv2_channels, 1);
    video_proj_ = nn::Linear("video.proj", config.conv2_channels, config.video_dim);
    sensor_rnn_ = nn::Lstm("sensor.rnn", static_cast<int>(vitalgen::kChannelCount), config.sensor_dim);
    fc1_ = nn::Linear("head.fc1", config.video_dim + config.sensor_dim, config.head_hidden);
    fc2_ = nn::Linear("head.fc2", config.head_hidden, kClasses);
    sensor_mean_ = nn::Param("sensor.mean", vitalgen::kChannelCount, 1);
    sensor_std_ = nn::Param("sensor.std", vitalgen::kChannelCount, 1);
    sensor_std_.value.setOnes();
}

kernels::Conv3dGeometry FusionModel::conv1_geometry() const {
    const auto& g = config_.geometry;
    return {3, config_.conv1_channels, g.frames, g.height, g.width, config_.kernel};
}

kernels::Conv3dGeometry FusionModel::conv2_geometry() const {
    const auto& g = config_.geometry;
    return {config_.conv1_channels, config_.conv2_channels, g.frames / 2, g.height / 2, g.width / 2, config_.kernel};
}

void FusionModel::init(std::uint64_t seed) {
    auto rng = substream(seed, {0xF05});
    // He-uniform for the rectified conv stages
    const auto he = [&](nn::Param& w, int fan_in) { nn::fill_uniform(w.value, std::sqrt(6.0 / fan_in), rng); };
    he(conv1_w_, static_cast<int>(conv1_w_.value.rows()));
    conv1_b_.value.setZero();
    he(conv2_w_, static_cast<int>(conv2_w_.value.rows()));
    conv2_b_.value.setZero();
    video_proj_.init(rng);
    sensor_rnn_.init(rng);
    fc1_.init(rng);
    fc2_.init(rng);
}

void FusionModel::fit_standardization(const std::vector<FusionSample>& train) {
    const auto d = static_cast<Eigen::Index>(vitalgen::kChannelCount);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sq = Eigen::VectorXd::Zero(d);
    double n = 0.0;
    for (const auto& s : train) {
        sum += s.sensors.samples.colwise().sum().transpose();
        sq += s.sensors.samples.array().square().colwise().sum().matrix().transpose();
        n += static_cast<double>(s.sensors.samples.rows());
    }
    if (n == 0.0) return;
    const Eigen::VectorXd mean = sum / n;
    sensor_mean_.value.col(0) = mean;
    sensor_std_.value.col(0) = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-6);
}

Eigen::VectorXd FusionModel::video_encode(const PersonClip& clip, bool flip, VideoCache* cache) const {
    const auto& g = config_.geometry;
    if (!(clip.geometry == g) || clip.pixels.size() != g.values()) {
        std::ostringstream os;
        os << "clip is " << clip.geometry.frames << 'x' << clip.geometry.height << 'x' << clip.geometry.width
           << ", model expects " << g.frames << 'x' << g.height << 'x' << g.width;
        fail(ErrorKind::shape, os.str());
    }
    VideoCache local;
    VideoCache& c = cache ? *cache : local;
    c.input.resize(3 * static_cast<std::size_t>(g.frames) * g.height * g.width);
    for (int ch = 0; ch < 3; ++ch)
        for (int t = 0; t < g.frames; ++t)
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x) {
                    const int sx = flip ? g.width - 1 - x : x;
                    c.input[((static_cast<std::size_t>(ch) * g.frames + t) * g.height + y) * g.width + x] =
                        (clip.at(t, y, sx, ch) - kPixelMean) / kPixelStd;
                }

    const auto g1 = conv1_geometry();
    c.act1.resize(g1.output_size());
    kp::conv3d_forward(g1, c.input, cspan(conv1_w_.value), cspan(conv1_b_.value), c.act1);
    relu_inplace(c.act1);
    const auto p1 = pool_of(g1);
    c.pool1.resize(p1.output_size());
    c.arg1.resize(p1.output_size());
    kp::maxpool3d_forward(p1, c.act1, c.pool1, c.arg1);

    const auto g2 = conv2_geometry();
    c.act2.resize(g2.output_size());
    kp::conv3d_forward(g2, c.pool1, cspan(conv2_w_.value), cspan(conv2_b_.value), c.act2);
    relu_inplace(c.act2);
    const auto p2 = pool_of(g2);
    c.pool2.resize(p2.output_size());
    c.arg2.resize(p2.output_size());
    kp::maxpool3d_forward(p2, c.act2, c.pool2, c.arg2);

    const std::size_t per = p2.output_size() / static_cast<std::size_t>(p2.channels);
    c.gap.resize(p2.channels);
    for (int ch = 0; ch < p2.channels; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per; ++i) acc += c.pool2[ch * per + i];
        c.gap[ch] = acc / static_cast<double>(per);
    }
    return video_proj_.forward(c.gap).col(0);
}

Eigen::MatrixXd FusionModel::sensor_inputs_step(const std::vector<const vitalgen::VitalSignSeries*>& batch,
                                                Eigen::Index t, const ModalityMask& mask) const {
    const auto d = static_cast<Eigen::Index>(vitalgen::kChannelCount);
    Eigen::MatrixXd x(d, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t b = 0; b < batch.size(); ++b)
        for (Eigen::Index c = 0; c < d; ++c)
            x(c, static_cast<Eigen::Index>(b)) =
                mask.channels[static_cast<std::size_t>(c)]
                    ? (batch[b]->samples(t, c) - sensor_mean_.value(c, 0)) / sensor_std_.value(c, 0)
                    : 0.0;
    return x;
}

std::vector<Eigen::MatrixXd> FusionModel::sensor_sequence(
    const std::vector<const vitalgen::VitalSignSeries*>& batch, const ModalityMask& mask) const {
    if (batch.empty()) fail(ErrorKind::shape, "empty sensor batch");
    const Eigen::Index t = batch.front()->samples.rows();
    if (t == 0) fail(ErrorKind::shape, "sensor series '" + batch.front()->subject_id + "' is empty");
    for (const auto* s : batch) {
        if (s->samples.rows() != t) fail(ErrorKind::shape, "sensor windows in a batch differ in length");
        if (s->samples.cols() != static_cast<Eigen::Index>(vitalgen::kChannelCount))
            fail(ErrorKind::shape, "sensor series '" + s->subject_id + "' does not have 4 channels");
    }
    std::vector<Eigen::MatrixXd> seq;
    seq.reserve(static_cast<std::size_t>(t));
    for (Eigen::Index i = 0; i < t; ++i) seq.push_back(sensor_inputs_step(batch, i, mask));
    return seq;
}

Eigen::VectorXd FusionModel::sensor_encode(const vitalgen::VitalSignSeries& series, const ModalityMask& mask) const {
    return sensor_rnn_.forward(sensor_sequence({&series}, mask), nullptr).col(0);
}

Eigen::VectorXd FusionModel::fuse(const Eigen::VectorXd& video, const Eigen::VectorXd& sensor) {
    Eigen::VectorXd out(video.size() + sensor.size());
    out << video, sensor;
    return out;
}

Eigen::MatrixXd FusionModel::head(const Eigen::MatrixXd& fused, bool train, std::uint64_t dropout_seed,
                                  HeadCache* cache) const {
    if (fused.rows() != config_.video_dim + config_.sensor_dim)
        fail(ErrorKind::shape, "fused vector has the wrong length");
    HeadCache local;
    HeadCache& c = cache ? *cache : local;
    c.fused = fused;
    c.hidden = fc1_.forward(fused).cwiseMax(0.0);
    if (train && config_.dropout > 0.0) {
        auto rng = substream(dropout_seed, {0xD0});
        std::bernoulli_distribution keep(1.0 - config_.dropout);
        c.keep.resize(c.hidden.rows(), c.hidden.cols());
        const double scale = 1.0 / (1.0 - config_.dropout);
        for (Eigen::Index i = 0; i < c.keep.size(); ++i) c.keep.data()[i] = keep(rng) ? scale : 0.0;
        c.dropped = c.hidden.cwiseProduct(c.keep);
    } else {
        c.keep.resize(0, 0);
        c.dropped = c.hidden;
    }
    return fc2_.forward(c.dropped);
}

Prediction FusionModel::classify(const Eigen::VectorXd& fused) const {
    return make_prediction(head(fused, false, 0).col(0));
}

Prediction FusionModel::predict(const FusionSample& sample) const {
    const auto& mask = config_.mask;
    const Eigen::VectorXd v =
        mask.video ? video_encode(sample.clip) : Eigen::VectorXd::Zero(config_.video_dim).eval();
    return classify(fuse(v, sensor_encode(sample.sensors, mask)));
}

std::vector<double> FusionModel::gap_to_act2_gradient(const VideoCache& cache, const Eigen::VectorXd& d_gap) const {
    const auto p2 = pool_of(conv2_geometry());
    const std::size_t per = p2.output_size() / static_cast<std::size_t>(p2.channels);
    std::vector<double> d_pool(p2.output_size());
    for (int ch = 0; ch < p2.channels; ++ch)
        for (std::size_t i = 0; i < per; ++i) d_pool[ch * per + i] = d_gap[ch] / static_cast<double>(per);
    std::vector<double> d_act(p2.input_size());
    kp::maxpool3d_backward(p2, d_pool, cache.arg2, d_act);
    return d_act;
}

void FusionModel::video_backward(const VideoCache& cache, const Eigen::VectorXd& d_embedding) {
    const Eigen::VectorXd d_gap = video_proj_.backward(cache.gap, d_embedding).col(0);
    std::vector<double> d2 = gap_to_act2_gradient(cache, d_gap);
    for (std::size_t i = 0; i < d2.size(); ++i)
        if (cache.act2[i] <= 0.0) d2[i] = 0.0;
    const auto g2 = conv2_geometry();
    kp::conv3d_backward_weight(g2, cache.pool1, d2, mspan(conv2_w_.grad), mspan(conv2_b_.grad));
    std::vector<double> d_pool1(g2.input_size());
    kp::conv3d_backward_input(g2, d2, cspan(conv2_w_.value), d_pool1);

    const auto g1 = conv1_geometry();
    std::vector<double> d1(g1.output_size());
    kp::maxpool3d_backward(pool_of(g1), d_pool1, cache.arg1, d1);
    for (std::size_t i = 0; i < d1.size(); ++i)
        if (cache.act1[i] <= 0.0) d1[i] = 0.0;
    kp::conv3d_backward_weight(g1, cache.input, d1, mspan(conv1_w_.grad), mspan(conv1_b_.grad));
}

double FusionModel::loss(const std::vector<const FusionSample*>& batch, const std::vector<bool>& flips, bool train,
                         std::uint64_t dropout_seed, bool accumulate) {
    if (batch.empty()) fail(ErrorKind::shape, "empty batch");
    if (flips.size() != batch.size()) fail(ErrorKind::shape, "flip flags do not match the batch");
    const auto bsz = static_cast<Eigen::Index>(batch.size());
    const auto& mask = config_.mask;

    std::vector<VideoCache> caches(mask.video ? batch.size() : 0);
    Eigen::MatrixXd video = Eigen::MatrixXd::Zero(config_.video_dim, bsz);
    if (mask.video)
        for (std::size_t b = 0; b < batch.size(); ++b)
            video.col(static_cast<Eigen::Index>(b)) = video_encode(batch[b]->clip, flips[b], &caches[b]);

    std::vector<const vitalgen::VitalSignSeries*> series;
    for (const auto* s : batch) series.push_back(&s->sensors);
    nn::LstmCache lstm_cache;
    const Eigen::MatrixXd sensor = sensor_rnn_.forward(sensor_sequence(series, mask), accumulate ? &lstm_cache : nullptr);

    Eigen::MatrixXd fused(config_.video_dim + config_.sensor_dim, bsz);
    fused << video, sensor;
    HeadCache hc;
    const Eigen::MatrixXd probs = nn::softmax(head(fused, train, dropout_seed, &hc));

    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(kClasses, bsz);
    double total = 0.0;
    for (Eigen::Index b = 0; b < bsz; ++b) {
        const auto& label = batch[static_cast<std::size_t>(b)]->label;
        if (!label) fail(ErrorKind::training, "sample without an action label");
        const auto k = static_cast<Eigen::Index>(vitalgen::index(*label));
        onehot(k, b) = 1.0;
        total -= std::log(probs(k, b));
    }
    const double mean_loss = total / static_cast<double>(bsz);
    if (!accumulate) return mean_loss;

    const Eigen::MatrixXd d_logits = (probs - onehot) / static_cast<double>(bsz);
    Eigen::MatrixXd d_hidden = fc2_.backward(hc.dropped, d_logits);
    if (hc.keep.size() > 0) d_hidden = d_hidden.cwiseProduct(hc.keep);
    d_hidden = (hc.hidden.array() > 0.0).select(d_hidden, 0.0);
    const Eigen::MatrixXd d_fused = fc1_.backward(fused, d_hidden);
    sensor_rnn_.backward(lstm_cache, d_fused.bottomRows(config_.sensor_dim));
    if (mask.video)
        for (std::size_t b = 0; b < batch.size(); ++b)
            video_backward(caches[b], d_fused.col(static_cast<Eigen::Index>(b)).head(config_.video_dim));
    return mean_loss;
}

double FusionModel::logit_from_features(const std::vector<double>& act2, const Eigen::VectorXd& sensor_embedding,
                                        ActionLabel target) const {
    const auto p2 = pool_of(conv2_geometry());
    if (act2.size() != p2.input_size()) fail(ErrorKind::shape, "feature maps have the wrong size");
    std::vector<double> pooled(p2.output_size());
    std::vector<std::int32_t> arg(p2.output_size());
    kp::maxpool3d_forward(p2, act2, pooled, arg);
    const std::size_t per = p2.output_size() / static_cast<std::size_t>(p2.channels);
    Eigen::VectorXd gap(p2.channels);
    for (int ch = 0; ch < p2.channels; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per; ++i) acc += pooled[ch * per + i];
        gap[ch] = acc / static_cast<double>(per);
    }
    const Eigen::VectorXd logits = head(fuse(video_proj_.forward(gap).col(0), sensor_embedding), false, 0).col(0);
    return logits[static_cast<Eigen::Index>(vitalgen::index(target))];
}

std::vector<double> FusionModel::feature_gradient(const VideoCache& cache, const Eigen::VectorXd& sensor_embedding,
                                                  ActionLabel target) const {
    const Eigen::VectorXd fused = fuse(video_proj_.forward(cache.gap).col(0), sensor_embedding);
    const Eigen::VectorXd hidden = fc1_.forward(fused).col(0);
    const Eigen::VectorXd d_hidden =
        (hidden.array() > 0.0)
            .select(fc2_.weight.value.row(static_cast<Eigen::Index>(vitalgen::index(target))).transpose(), 0.0);
    const Eigen::VectorXd d_fused = fc1_.weight.value.transpose() * d_hidden;
    const Eigen::VectorXd d_gap = video_proj_.weight.value.transpose() * d_fused.head(config_.video_dim);
    return gap_to_act2_gradient(cache, d_gap);
}

nn::ParamRefs FusionModel::parameters() {
    nn::ParamRefs p{&conv1_w_, &conv1_b_, &conv2_w_, &conv2_b_};
    video_proj_.collect(p);
    sensor_rnn_.collect(p);
    fc1_.collect(p);
    fc2_.collect(p);
    return p;
}

nn::ParamRefs FusionModel::tensors() {
    auto p = parameters();
    p.push_back(&sensor_mean_);
    p.push_back(&sensor_std_);
    return p;
}

ComplexityReport FusionModel::complexity(int sensor_steps) const {
    ComplexityReport r;
    auto add_params = [&](const std::string& name, std::size_t n) {
        r.parameter_breakdown.emplace_back(name, n);
        r.parameters += n;
    };
    auto add_macs = [&](const std::string& name, std::size_t n) {
        r.mac_breakdown.emplace_back(name, n);
        r.macs += n;
    };
    const auto sz = [](const nn::Param& p) { return static_cast<std::size_t>(p.value.size()); };
    add_params("video.conv1", sz(conv1_w_) + sz(conv1_b_));
    add_params("video.conv2", sz(conv2_w_) + sz(conv2_b_));
    add_params("video.proj", sz(video_proj_.weight) + sz(video_proj_.bias));
    add_params("sensor.rnn", sz(sensor_rnn_.w_input) + sz(sensor_rnn_.w_hidden) + sz(sensor_rnn_.bias));
    add_params("head.fc1", sz(fc1_.weight) + sz(fc1_.bias));
    add_params("head.fc2", sz(fc2_.weight) + sz(fc2_.bias));

    add_macs("video.conv1", conv1_geometry().macs());
    add_macs("video.conv2", conv2_geometry().macs());
    add_macs("video.proj", video_proj_.macs());
    add_macs("sensor.rnn", sensor_rnn_.macs_per_step() * static_cast<std::size_t>(std::max(0, sensor_steps)));
    add_macs("head.fc1", fc1_.macs());
    add_macs("head.fc2", fc2_.macs());
    return r;
}

namespace {

nlohmann::json config_json(const FusionConfig& c) {
    return {{"frames", c.geometry.frames},
            {"height", c.geometry.height},
            {"width", c.geometry.width},
            {"clip_fps", c.clip_fps},
            {"conv1_channels", c.conv1_channels},
            {"conv2_channels", c.conv2_channels},
            {"kernel", c.kernel},
            {"video_dim", c.video_dim},
            {"sensor_dim", c.sensor_dim},
            {"head_hidden", c.head_hidden},
            {"dropout", c.dropout},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"mask", c.mask.name()},
            {"flip_augment", c.flip_augment}};
}

FusionConfig config_from(const nlohmann::json& j) {
    FusionConfig c;
    c.geometry = {j.at("frames"), j.at("height"), j.at("width")};
    c.clip_fps = j.value("clip_fps", 1.0);
    c.conv1_channels = j.at("conv1_channels");
    c.conv2_channels = j.at("conv2_channels");
    c.kernel = j.at("kernel");
    c.video_dim = j.at("video_dim");
    c.sensor_dim = j.at("sensor_dim");
    c.head_hidden = j.at("head_hidden");
    c.dropout = j.at("dropout");
    c.learning_rate = j.at("learning_rate");
    c.epochs = j.at("epochs");
    c.batch_size = j.at("batch_size");
    c.seed = j.at("seed");
    c.mask = parse_mask(j.at("mask").get<std::string>());
    c.flip_augment = j.at("flip_augment");
    return c;
}

}  // namespace

void FusionModel::save(const std::filesystem::path& path) {
    auto j = config_json(config_);
    j["trained"] = trained_;
    nn::write_checkpoint(path, "fusion", j.dump(), tensors());
}

FusionModel FusionModel::load(const std::filesystem::path& path) {
    const auto ckpt = nn::read_checkpoint(path);
    if (ckpt.kind != "fusion") fail(ErrorKind::parse, path.string() + ": not a fusion checkpoint");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ckpt.config_json);
        FusionModel model(config_from(j));
        nn::load_tensors(ckpt, model.tensors());
        model.trained_ = j.value("trained", false);
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, path.string() + ": bad config (" + e.what() + ")");
    }
}

}  // namespace atract::fusion
