#pragma once

#include <vector>

#include "atract/nn/param.hpp"

namespace atract::nn {

// Per-step activations kept for backpropagation through time.
struct LstmCache {
    std::vector<Eigen::MatrixXd> inputs;  // x_t, (in x B)
    std::vector<Eigen::MatrixXd> gates;   // activated [i; f; g; o], (4H x B)
    std::vector<Eigen::MatrixXd> cells;   // c_0 .. c_T
    std::vector<Eigen::MatrixXd> hidden;  // h_0 .. h_T
};

// Single-layer LSTM, zero initial state, gate order i, f, g, o.
class Lstm {
public:
    Lstm() = default;
    Lstm(const std::string& name, int in, int hidden);

    void init(std::mt19937_64& rng);

    // Returns the final hidden state (H x B). `cache` may be null for inference.
    Eigen::MatrixXd forward(const std::vector<Eigen::MatrixXd>& inputs, LstmCache* cache) const;
    // dL/dh_T -> dL/dx_t for every step; accumulates parameter gradients.
    std::vector<Eigen::MatrixXd> backward(const LstmCache& cache, const Eigen::MatrixXd& dh_last);

    void collect(ParamRefs& out) {
        out.push_back(&w_input);
        out.push_back(&w_hidden);
        out.push_back(&bias);
    }

    int input_size() const { return static_cast<int>(w_input.value.cols()); }
    int hidden_size() const { return static_cast<int>(w_hidden.value.cols()); }
    std::size_t macs_per_step() const {
        return static_cast<std::size_t>(w_input.value.size() + w_hidden.value.size());
    }

    Param w_input;   // 4H x in
    Param w_hidden;  // 4H x H
    Param bias;      // 4H x 1
};

}  // namespace atract::nn
