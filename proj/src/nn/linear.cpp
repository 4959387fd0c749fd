#include "atract/nn/linear.hpp"

#include <cmath>

namespace atract::nn {

Linear::Linear(const std::string& name, int in, int out)
    : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {}

void Linear::init(std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / (in_features() + out_features()));
    fill_uniform(weight.value, bound, rng);
    bias.value.setZero();
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd y = weight.value * x;
    y.colwise() += bias.value.col(0);
    return y;
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy) {
    weight.grad.noalias() += dy * x.transpose();
    bias.grad.col(0) += dy.rowwise().sum();
    return weight.value.transpose() * dy;
}

}  // namespace atract::nn
