#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "atract/cvvitae/losses.hpp"
#include "atract/nn/linear.hpp"
#include "atract/nn/lstm.hpp"
#include "atract/vitalgen/series.hpp"

namespace atract::cvvitae {

struct CvvitaeConfig {
    int latent_dim = 16;
    // The regularizer reads z as a sequence of `latent_steps` chunks of
    // latent_dim / latent_steps values each.
    int latent_steps = 4;
    int hidden = 64;
    int regularizer_hidden = 32;
    double alpha = 1.0;
    double learning_rate = 1e-4;
    int epochs = 50;
    int batch_size = 2;
    std::uint64_t seed = 1;
};

void validate(const CvvitaeConfig& config);

// A batch in model space: standardized, flattened series (T*D x B), their
// labels, and the reparameterization noise (latent_dim x B).
struct Batch {
    Eigen::MatrixXd x;
    std::vector<vitalgen::ClinicalLabel> labels;
    Eigen::MatrixXd eps;
};

struct AugmentOptions {
    // Scale of the sampled reparameterization noise; 0 takes the posterior mean.
    double noise_scale = 0.0;
};

// Conditional variational autoencoder over fixed-length vital-sign windows,
// conditioned by one-hot clinical labels at the encoder and decoder inputs, with
// a recurrent latent-space classifier as regularizer.
class Cvvitae {
public:
    Cvvitae(const CvvitaeConfig& config, int timesteps, int channels = 4);

    const CvvitaeConfig& config() const { return config_; }
    int timesteps() const { return timesteps_; }
    int channels() const { return channels_; }
    bool trained() const { return trained_; }

    void init(std::uint64_t seed);
    // Per-channel standardization fitted on `corpus`.
    void fit_standardization(const std::vector<vitalgen::VitalSignSeries>& corpus);

    LatentDistribution encode(const vitalgen::VitalSignSeries& x, vitalgen::ClinicalLabel y) const;
    // Returns T x D values in physical units.
    Eigen::MatrixXd decode(const LatentSample& z, vitalgen::ClinicalLabel y) const;

    // Mean cross-entropy of the latent classifier over (z columns, labels).
    double regularizer_loss(const Eigen::MatrixXd& z_batch,
                            const std::vector<vitalgen::ClinicalLabel>& labels) const;
    // Latent classifier label distribution (C x B).
    Eigen::MatrixXd classify_latent(const Eigen::MatrixXd& z_batch) const;

    // Forward pass over a batch; when `accumulate` is set the analytic gradient
    // of `total` is added to every parameter's grad.
    LossBreakdown compute_losses(const Batch& batch, bool accumulate);

    // decode(reparameterize(encode(x, target), eps), target) with eps drawn from
    // `seed`, clamped to channel ranges and relabeled.
    vitalgen::VitalSignSeries augment(const vitalgen::VitalSignSeries& x,
                                      vitalgen::ClinicalLabel target, std::uint64_t seed,
                                      AugmentOptions options = {}) const;

    // Standardized, flattened column (T*D) for one series.
    Eigen::VectorXd to_model_space(const vitalgen::VitalSignSeries& x) const;
    Eigen::MatrixXd from_model_space(const Eigen::VectorXd& v) const;

    nn::ParamRefs parameters();
    // parameters() followed by the standardization buffers.
    nn::ParamRefs tensors();

    void save(const std::filesystem::path& path);
    static Cvvitae load(const std::filesystem::path& path);

    void mark_trained() { trained_ = true; }

private:
    Eigen::MatrixXd condition(const std::vector<vitalgen::ClinicalLabel>& labels) const;
    std::vector<Eigen::MatrixXd> latent_sequence(const Eigen::MatrixXd& z) const;

    CvvitaeConfig config_;
    int timesteps_;
    int channels_;
    bool trained_ = false;

    nn::Linear enc_hidden_;
    nn::Linear enc_mu_;
    nn::Linear enc_log_var_;
    nn::Linear dec_hidden_;
    nn::Linear dec_out_;
    nn::Lstm reg_rnn_;
    nn::Linear reg_out_;
    nn::Param mean_;  // D x 1
    nn::Param std_;   // D x 1
};

struct TrainResult {
    Cvvitae model;
    // One entry per epoch: mean of the batch losses seen during that epoch.
    std::vector<LossBreakdown> history;
};

// Errors: empty corpus, non-clinical labels, mismatched lengths, or a missing
// clinical class (named in the message).
TrainResult train(const std::vector<vitalgen::VitalSignSeries>& corpus, const CvvitaeConfig& config);

// Mean losses over `corpus` with noise drawn from `seed`, no parameter update.
LossBreakdown evaluate(Cvvitae& model, const std::vector<vitalgen::VitalSignSeries>& corpus,
                       std::uint64_t seed);

void write_history_csv(const std::vector<LossBreakdown>& history, const std::filesystem::path& path);

}  // namespace atract::cvvitae
