#include "atract/cvvitae/losses.hpp"

#include <cmath>

#include "atract/common/error.hpp"
#include "atract/nn/softmax.hpp"

namespace atract::cvvitae {

LatentSample reparameterize(const LatentDistribution& d, const Eigen::VectorXd& eps) {
    if (eps.size() != d.mu.size() || d.log_var.size() != d.mu.size())
        fail(ErrorKind::shape, "reparameterize: noise dimension does not match latent dimension");
    return {d.mu + ((0.5 * d.log_var.array()).exp() * eps.array()).matrix()};
}

double reconstruction_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
        fail(ErrorKind::shape, "reconstruction_loss: shapes differ");
    if (x.size() == 0) return 0.0;
    return (x_hat - x).squaredNorm() / static_cast<double>(x.size());
}

double kl_loss(const LatentDistribution& d) {
    if (d.log_var.size() != d.mu.size()) fail(ErrorKind::shape, "kl_loss: mu/log_var differ");
    const auto lv = d.log_var.array();
    // exp(lv) - 1 - lv computed via expm1 to stay accurate near lv = 0.
    const Eigen::ArrayXd excess = lv.unaryExpr([](double v) { return std::expm1(v) - v; });
    return 0.5 * (d.mu.array().square() + excess).sum();
}

double cross_entropy(const Eigen::MatrixXd& probabilities,
                     const std::vector<vitalgen::ClinicalLabel>& labels) {
    if (static_cast<std::size_t>(probabilities.cols()) != labels.size())
        fail(ErrorKind::shape, "cross_entropy: batch size mismatch");
    if (labels.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t b = 0; b < labels.size(); ++b)
        sum -= std::log(probabilities(static_cast<Eigen::Index>(vitalgen::index(labels[b])),
                                      static_cast<Eigen::Index>(b)));
    return sum / static_cast<double>(labels.size());
}

LossBreakdown total_loss(double reconstruction, double kl, double regularizer, double alpha) {
    if (alpha < 0.0) fail(ErrorKind::config, "alpha must be >= 0");
    return {reconstruction, kl, regularizer, alpha * (reconstruction + kl) + regularizer};
}

Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) { return nn::softmax(logits); }

}  // namespace atract::cvvitae
