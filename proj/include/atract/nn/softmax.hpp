#pragma once

#include <Eigen/Dense>

namespace atract::nn {

// Column-wise softmax, shifted by the column max for stability.
inline Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p(logits.rows(), logits.cols());
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
        const double m = logits.col(b).maxCoeff();
        p.col(b) = (logits.col(b).array() - m).exp().matrix();
        p.col(b) /= p.col(b).sum();
    }
    return p;
}

}  // namespace atract::nn
