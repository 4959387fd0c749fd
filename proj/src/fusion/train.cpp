#include "atract/fusion/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"
#include "atract/nn/adam.hpp"
#include "atract/vitalgen/csv.hpp"

namespace atract::fusion {

using vitalgen::ActionLabel;

namespace {

std::size_t class_of(const FusionSample& s) {
    if (!s.label) fail(ErrorKind::training, "sample '" + s.sensors.subject_id + "' has no action label");
    return vitalgen::index(*s.label);
}

}  // namespace

Split split_samples(const std::vector<FusionSample>& samples, double test_fraction, std::uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction >= 1.0) fail(ErrorKind::config, "test_fraction must be in [0, 1)");
    std::array<std::vector<std::size_t>, kClasses> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[class_of(samples[i])].push_back(i);
    std::vector<bool> is_test(samples.size(), false);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto idx = by_class[c];
        auto rng = substream(seed, {0x5B1, c});
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = true;
    }
    Split out;
    for (std::size_t i = 0; i < samples.size(); ++i) (is_test[i] ? out.test : out.train).push_back(samples[i]);
    return out;
}

FusionTrainResult train_fusion(const std::vector<FusionSample>& train, const FusionConfig& config) {
    validate(config);
    if (train.empty()) fail(ErrorKind::training, "empty training split");
    std::array<int, kClasses> counts{};
    for (const auto& s : train) ++counts[class_of(s)];
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0)
            fail(ErrorKind::training,
                 "class '" + std::string(vitalgen::to_string(vitalgen::kAllActions[c])) + "' missing from training split");

    FusionTrainResult result{FusionModel(config), {}};
    auto& model = result.model;
    model.init(config.seed);
    model.fit_standardization(train);
    auto params = model.parameters();
    nn::Adam adam(params, {.learning_rate = config.learning_rate});

    std::vector<std::size_t> order(train.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto e = static_cast<std::uint64_t>(epoch);
        std::iota(order.begin(), order.end(), 0);
        auto shuffle_rng = substream(config.seed, {0x5F, e});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        auto flip_rng = substream(config.seed, {0xF1, e});
        std::bernoulli_distribution coin(0.5);

        double sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<const FusionSample*> batch;
            std::vector<bool> flips;
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(&train[order[k]]);
                flips.push_back(config.flip_augment && coin(flip_rng));
            }
            const std::uint64_t dropout_seed = substream(config.seed, {0xD1, e, static_cast<std::uint64_t>(batches)})();
            nn::zero_grads(params);
            sum += model.loss(batch, flips, true, dropout_seed, true);
            adam.step();
            ++batches;
        }
        result.history.push_back(sum / batches);
    }
    model.mark_trained();
    return result;
}

void write_loss_history_csv(const std::vector<double>& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string());
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < history.size(); ++e) out << e << ',' << vitalgen::format_double(history[e]) << '\n';
}

Evaluation tally(const std::vector<ActionLabel>& truth, const std::vector<ActionLabel>& predicted) {
    if (truth.size() != predicted.size()) fail(ErrorKind::shape, "truth and predictions differ in length");
    Evaluation ev;
    ev.total = truth.size();
    ev.predictions = predicted;
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++ev.confusion(static_cast<Eigen::Index>(vitalgen::index(truth[i])),
                       static_cast<Eigen::Index>(vitalgen::index(predicted[i])));
    ev.accuracy = ev.total ? static_cast<double>(ev.confusion.trace()) / static_cast<double>(ev.total) : 0.0;
    return ev;
}

Evaluation evaluate(const FusionModel& model, const std::vector<FusionSample>& test) {
    std::vector<ActionLabel> truth, predicted;
    for (const auto& s : test) {
        truth.push_back(vitalgen::kAllActions[class_of(s)]);
        predicted.push_back(model.predict(s).label);
    }
    return tally(truth, predicted);
}

void write_confusion_csv(const Evaluation& eval, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string());
    out << "truth\\predicted";
    for (auto a : vitalgen::kAllActions) out << ',' << vitalgen::to_string(a);
    out << '\n';
    for (int r = 0; r < kClasses; ++r) {
        out << vitalgen::to_string(vitalgen::kAllActions[static_cast<std::size_t>(r)]);
        for (int c = 0; c < kClasses; ++c) out << ',' << eval.confusion(r, c);
        out << '\n';
    }
}

bool masked_invariance(const FusionModel& model, const std::vector<FusionSample>& samples, std::uint64_t seed) {
    const auto& mask = model.config().mask;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto rng = substream(seed, {0x1A7, i});
        std::uniform_real_distribution<double> u(-1000.0, 1000.0);
        FusionSample perturbed = samples[i];
        for (std::size_t c = 0; c < vitalgen::kChannelCount; ++c)
            if (!mask.channels[c])
                for (Eigen::Index t = 0; t < perturbed.sensors.samples.rows(); ++t)
                    perturbed.sensors.samples(t, static_cast<Eigen::Index>(c)) = u(rng);
        if (!mask.video) {
            std::uniform_real_distribution<float> px(0.0f, 1.0f);
            for (auto& p : perturbed.clip.pixels) p = px(rng);
        }
        const auto a = model.predict(samples[i]).logits;
        const auto b = model.predict(perturbed).logits;
        if (a != b) return false;
    }
    return true;
}

std::vector<AblationRow> ablate(const AblationInputs& inputs, const FusionConfig& base,
                                const std::function<void(const AblationRow&)>& on_row) {
    std::vector<AblationRow> rows;
    const auto run = [&](const std::string& name, const ModalityMask& mask, const Split& split) {
        FusionConfig cfg = base;
        cfg.mask = mask;
        const auto trained = train_fusion(split.train, cfg);
        const auto ev = evaluate(trained.model, split.test);
        AblationRow row{name, mask, ev.accuracy, ev.total, masked_invariance(trained.model, split.test, base.seed)};
        if (on_row) on_row(row);
        rows.push_back(std::move(row));
    };
    for (const auto& mask : table_masks()) run(mask.name(), mask, inputs.raw);
    const ModalityMask full;
    run(full.name() + " (w/o)", full, inputs.raw);
    if (inputs.augmented) run(full.name() + " (w)", full, *inputs.augmented);
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string());
    out << "mask,accuracy,n_test\n";
    for (const auto& r : rows) out << r.name << ',' << vitalgen::format_double(r.accuracy) << ',' << r.n_test << '\n';
}

}  // namespace atract::fusion
