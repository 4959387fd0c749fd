#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "atract/fusion/model.hpp"

namespace atract::fusion {

struct Split {
    std::vector<FusionSample> train;
    std::vector<FusionSample> test;
};

// Stratified split: round(test_fraction * n_c) samples of every class go to
// the test side, chosen by a seeded shuffle. Input order is kept on both sides.
Split split_samples(const std::vector<FusionSample>& samples, double test_fraction, std::uint64_t seed);

struct FusionTrainResult {
    FusionModel model;
    std::vector<double> history;  // mean training loss per epoch
};

// Errors: unlabeled samples or a class missing from `train` -> training error.
FusionTrainResult train_fusion(const std::vector<FusionSample>& train, const FusionConfig& config);

void write_loss_history_csv(const std::vector<double>& history, const std::filesystem::path& path);

struct Evaluation {
    double accuracy = 0.0;
    std::size_t total = 0;
    // confusion(truth, predicted), class index order
    Eigen::Matrix<std::size_t, kClasses, kClasses> confusion = Eigen::Matrix<std::size_t, kClasses, kClasses>::Zero();
    std::vector<vitalgen::ActionLabel> predictions;
};

// Accuracy = trace / total from a truth-by-prediction confusion matrix.
Evaluation tally(const std::vector<vitalgen::ActionLabel>& truth, const std::vector<vitalgen::ActionLabel>& predicted);
Evaluation evaluate(const FusionModel& model, const std::vector<FusionSample>& test);

// 6x6 with a labeled header row and a leading truth column.
void write_confusion_csv(const Evaluation& eval, const std::filesystem::path& path);

struct AblationRow {
    std::string name;  // mask name, with " (w/o)" / " (w)" on the fusion rows
    ModalityMask mask;
    double accuracy = 0.0;
    std::size_t n_test = 0;
    // Logits unchanged after perturbing every masked input of every test sample.
    bool invariance_holds = false;
};

struct AblationInputs {
    Split raw;
    // Same split with injury-class sensor streams augmented; enables the "(w)" row.
    const Split* augmented = nullptr;
};

// The thirteen table masks trained and tested on `raw`, then the full mask on
// raw ("(w/o)") and on augmented ("(w)") streams. `base` supplies everything but
// the mask. Rows are emitted in that order; `on_row` sees each as it finishes.
std::vector<AblationRow> ablate(const AblationInputs& inputs, const FusionConfig& base,
                                const std::function<void(const AblationRow&)>& on_row = {});

// Exact-equality check of the masking contract on `samples`.
bool masked_invariance(const FusionModel& model, const std::vector<FusionSample>& samples, std::uint64_t seed);

// Header `mask,accuracy,n_test`.
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

}  // namespace atract::fusion
