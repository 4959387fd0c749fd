#include "atract/nn/adam.hpp"

#include <cmath>

#include "atract/common/error.hpp"

namespace atract::nn {

Adam::Adam(ParamRefs params, AdamOptions options) : params_(std::move(params)), opt_(options) {
    if (!(opt_.learning_rate > 0.0)) fail(ErrorKind::config, "learning rate must be positive");
    for (const auto* p : params_) {
        m_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = *params_[k];
        m_[k] = opt_.beta1 * m_[k] + (1.0 - opt_.beta1) * p.grad;
        v_[k] = opt_.beta2 * v_[k] + (1.0 - opt_.beta2) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= opt_.learning_rate * (m_[k].array() / c1) /
                           ((v_[k].array() / c2).sqrt() + opt_.epsilon);
    }
}

}  // namespace atract::nn
