#pragma once

#include <vector>

#include "atract/nn/param.hpp"

namespace atract::nn {

struct AdamOptions {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction. Moments are held per parameter in the order the
// parameters were registered.
class Adam {
public:
    Adam(ParamRefs params, AdamOptions options);

    void step();
    long steps_taken() const { return t_; }

private:
    ParamRefs params_;
    AdamOptions opt_;
    std::vector<Eigen::MatrixXd> m_;
    std::vector<Eigen::MatrixXd> v_;
    long t_ = 0;
};

}  // namespace atract::nn
