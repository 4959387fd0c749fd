#pragma once

#include <vector>

#include <Eigen/Dense>

#include "atract/vitalgen/labels.hpp"

namespace atract::cvvitae {

// Gaussian posterior parameters q(z | x, y).
struct LatentDistribution {
    Eigen::VectorXd mu;
    Eigen::VectorXd log_var;
};

struct LatentSample {
    Eigen::VectorXd z;
};

struct LossBreakdown {
    double reconstruction = 0.0;
    double kl = 0.0;
    double regularizer = 0.0;
    double total = 0.0;
};

// z = mu + exp(log_var / 2) * eps, elementwise.
LatentSample reparameterize(const LatentDistribution& d, const Eigen::VectorXd& eps);

// Mean squared error over every entry (timesteps, channels and batch columns).
double reconstruction_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat);

// KL(q || N(0, I)) = 0.5 * sum(mu^2 + exp(log_var) - 1 - log_var).
double kl_loss(const LatentDistribution& d);

// Mean cross-entropy -log p(y_i) over the batch; `probabilities` is (C x B).
double cross_entropy(const Eigen::MatrixXd& probabilities,
                     const std::vector<vitalgen::ClinicalLabel>& labels);

// total = alpha * (reconstruction + kl) + regularizer.
LossBreakdown total_loss(double reconstruction, double kl, double regularizer, double alpha);

// Column-wise numerically stable softmax.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits);

}  // namespace atract::cvvitae
