#pragma once

#include "atract/nn/param.hpp"

namespace atract::nn {

// y = W x + b on column batches: x is (in x B), y is (out x B).
class Linear {
public:
    Linear() = default;
    Linear(const std::string& name, int in, int out);

    void init(std::mt19937_64& rng);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    // Accumulates dW, db and returns dL/dx.
    Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy);

    void collect(ParamRefs& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    int in_features() const { return static_cast<int>(weight.value.cols()); }
    int out_features() const { return static_cast<int>(weight.value.rows()); }

    // Multiply-accumulates per sample.
    std::size_t macs() const { return static_cast<std::size_t>(weight.value.size()); }

    Param weight;  // out x in
    Param bias;    // out x 1
};

}  // namespace atract::nn
