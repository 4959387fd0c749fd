#include "atract/nn/lstm.hpp"

#include <cmath>

#include "atract/common/error.hpp"

namespace atract::nn {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
    return (1.0 + (-a.array()).exp()).inverse().matrix();
}

}  // namespace

Lstm::Lstm(const std::string& name, int in, int hidden)
    : w_input(name + ".w_input", 4 * hidden, in),
      w_hidden(name + ".w_hidden", 4 * hidden, hidden),
      bias(name + ".bias", 4 * hidden, 1) {}

void Lstm::init(std::mt19937_64& rng) {
    const int h = hidden_size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    fill_uniform(w_input.value, bound, rng);
    fill_uniform(w_hidden.value, bound, rng);
    bias.value.setZero();
    bias.value.block(h, 0, h, 1).setOnes();  // forget gate
}

Eigen::MatrixXd Lstm::forward(const std::vector<Eigen::MatrixXd>& inputs, LstmCache* cache) const {
    if (inputs.empty()) fail(ErrorKind::shape, "lstm: empty input sequence");
    const Eigen::Index h = hidden_size();
    const Eigen::Index batch = inputs.front().cols();
    Eigen::MatrixXd hs = Eigen::MatrixXd::Zero(h, batch);
    Eigen::MatrixXd cs = Eigen::MatrixXd::Zero(h, batch);
    if (cache) {
        cache->inputs = inputs;
        cache->gates.clear();
        cache->cells.assign(1, cs);
        cache->hidden.assign(1, hs);
    }
    for (const auto& x : inputs) {
        if (x.rows() != w_input.value.cols() || x.cols() != batch)
            fail(ErrorKind::shape, "lstm: input step has wrong shape");
        Eigen::MatrixXd a = w_input.value * x + w_hidden.value * hs;
        a.colwise() += bias.value.col(0);
        Eigen::MatrixXd gates(4 * h, batch);
        gates.topRows(2 * h) = sigmoid(a.topRows(2 * h));
        gates.middleRows(2 * h, h) = a.middleRows(2 * h, h).array().tanh().matrix();
        gates.bottomRows(h) = sigmoid(a.bottomRows(h));
        cs = gates.middleRows(h, h).cwiseProduct(cs) +
             gates.topRows(h).cwiseProduct(gates.middleRows(2 * h, h));
        hs = gates.bottomRows(h).cwiseProduct(cs.array().tanh().matrix());
        if (cache) {
            cache->gates.push_back(std::move(gates));
            cache->cells.push_back(cs);
            cache->hidden.push_back(hs);
        }
    }
    return hs;
}

std::vector<Eigen::MatrixXd> Lstm::backward(const LstmCache& cache, const Eigen::MatrixXd& dh_last) {
    const Eigen::Index h = hidden_size();
    const std::size_t steps = cache.gates.size();
    std::vector<Eigen::MatrixXd> dx(steps);
    Eigen::MatrixXd dh = dh_last;
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(h, dh_last.cols());
    for (std::size_t s = steps; s-- > 0;) {
        const auto& g = cache.gates[s];
        const auto i = g.topRows(h).array();
        const auto f = g.middleRows(h, h).array();
        const auto cand = g.middleRows(2 * h, h).array();
        const auto o = g.bottomRows(h).array();
        const Eigen::ArrayXXd tanh_c = cache.cells[s + 1].array().tanh();
        const auto c_prev = cache.cells[s].array();

        dc.array() += dh.array() * o * (1.0 - tanh_c.square());
        Eigen::MatrixXd da(4 * h, dh.cols());
        da.topRows(h) = (dc.array() * cand * i * (1.0 - i)).matrix();
        da.middleRows(h, h) = (dc.array() * c_prev * f * (1.0 - f)).matrix();
        da.middleRows(2 * h, h) = (dc.array() * i * (1.0 - cand.square())).matrix();
        da.bottomRows(h) = (dh.array() * tanh_c * o * (1.0 - o)).matrix();

        w_input.grad.noalias() += da * cache.inputs[s].transpose();
        w_hidden.grad.noalias() += da * cache.hidden[s].transpose();
        bias.grad.col(0) += da.rowwise().sum();
        dx[s] = w_input.value.transpose() * da;
        dh = w_hidden.value.transpose() * da;
        dc = (dc.array() * f).matrix();
    }
    return dx;
}

}  // namespace atract::nn
