#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace atract::nn {

// A named tensor with its accumulated gradient. Layers keep their tensors as
// matrices; shapes are documented per layer.
struct Param {
    std::string name;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;

    Param() = default;
    Param(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(Eigen::MatrixXd::Zero(rows, cols)),
          grad(Eigen::MatrixXd::Zero(rows, cols)) {}

    void zero_grad() { grad.setZero(); }
    Eigen::Index size() const { return value.size(); }
};

// Parameters in declared serialization order.
using ParamRefs = std::vector<Param*>;

inline void zero_grads(const ParamRefs& params) {
    for (auto* p : params) p->zero_grad();
}

inline std::size_t count_parameters(const ParamRefs& params) {
    std::size_t n = 0;
    for (const auto* p : params) n += static_cast<std::size_t>(p->size());
    return n;
}

// Uniform(-bound, bound) fill.
inline void fill_uniform(Eigen::MatrixXd& m, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
}

}  // namespace atract::nn
