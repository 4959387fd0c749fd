#include <vector>

#include "doctest.h"

#include "atract/common/rng.hpp"
#include "atract/kernels/conv3d.hpp"

using namespace atract;
using namespace atract::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("parallel conv3d agrees with the serial reference") {
    auto rng = substream(11, {});
    for (int kernel : {1, 3, 5}) {
        Conv3dGeometry g{.in_channels = 3, .out_channels = 4, .depth = 5, .height = 7, .width = 6,
                         .kernel = kernel};
        const auto in = random_vector(g.input_size(), rng);
        const auto w = random_vector(g.weight_size(), rng);
        const auto b = random_vector(4, rng);
        std::vector<double> ref(g.output_size()), par(g.output_size());
        reference::conv3d_forward(g, in, w, b, ref);
        parallel::conv3d_forward(g, in, w, b, par);
        CHECK(max_abs_diff(ref, par) < 1e-12);

        const auto gout = random_vector(g.output_size(), rng);
        std::vector<double> gin_ref(g.input_size()), gin_par(g.input_size(), 7.0);
        reference::conv3d_backward_input(g, gout, w, gin_ref);
        parallel::conv3d_backward_input(g, gout, w, gin_par);
        CHECK(max_abs_diff(gin_ref, gin_par) < 1e-12);

        std::vector<double> gw_ref(g.weight_size(), 0.5), gw_par(g.weight_size(), 0.5);
        std::vector<double> gb_ref(4, 0.25), gb_par(4, 0.25);
        reference::conv3d_backward_weight(g, in, gout, gw_ref, gb_ref);
        parallel::conv3d_backward_weight(g, in, gout, gw_par, gb_par);
        CHECK(max_abs_diff(gw_ref, gw_par) < 1e-11);
        CHECK(max_abs_diff(gb_ref, gb_par) < 1e-11);
    }
}

TEST_CASE("reference conv3d backward is the adjoint of forward") {
    // <conv(x), gy> = <x, conv^T(gy)> and the weight gradient equals the
    // finite difference of that inner product.
    auto rng = substream(12, {});
    Conv3dGeometry g{.in_channels = 2, .out_channels = 3, .depth = 4, .height = 5, .width = 4};
    const auto in = random_vector(g.input_size(), rng);
    auto w = random_vector(g.weight_size(), rng);
    const std::vector<double> zero_bias(3, 0.0);
    const auto gout = random_vector(g.output_size(), rng);

    std::vector<double> y(g.output_size()), gin(g.input_size());
    reference::conv3d_forward(g, in, w, zero_bias, y);
    reference::conv3d_backward_input(g, gout, w, gin);
    CHECK(dot(y, gout) == doctest::Approx(dot(in, gin)).epsilon(1e-12));

    std::vector<double> gw(g.weight_size(), 0.0), gb(3, 0.0);
    reference::conv3d_backward_weight(g, in, gout, gw, gb);
    for (std::size_t k : {std::size_t{0}, std::size_t{17}, g.weight_size() - 1}) {
        const double orig = w[k];
        w[k] = orig + 1e-5;
        reference::conv3d_forward(g, in, w, zero_bias, y);
        const double up = dot(y, gout);
        w[k] = orig - 1e-5;
        reference::conv3d_forward(g, in, w, zero_bias, y);
        const double down = dot(y, gout);
        w[k] = orig;
        CHECK(gw[k] == doctest::Approx((up - down) / 2e-5).epsilon(1e-7));
    }
}

TEST_CASE("max pooling kernels agree and route gradients to the argmax") {
    auto rng = substream(13, {});
    Pool3dGeometry g{.channels = 3, .depth = 5, .height = 6, .width = 4};
    CHECK(g.out_depth() == 2);
    const auto in = random_vector(g.input_size(), rng);
    std::vector<double> ref(g.output_size()), par(g.output_size());
    std::vector<std::int32_t> ia(g.output_size()), ib(g.output_size());
    reference::maxpool3d_forward(g, in, ref, ia);
    parallel::maxpool3d_forward(g, in, par, ib);
    CHECK(ref == par);
    CHECK(ia == ib);
    for (std::size_t o = 0; o < ref.size(); ++o) CHECK(in[ia[o]] == ref[o]);

    const auto gout = random_vector(g.output_size(), rng);
    std::vector<double> ga(g.input_size(), 1.0), gb(g.input_size(), 2.0);
    reference::maxpool3d_backward(g, gout, ia, ga);
    parallel::maxpool3d_backward(g, gout, ib, gb);
    CHECK(ga == gb);
    double total = 0.0;
    for (double v : ga) total += v;
    double expect = 0.0;
    for (double v : gout) expect += v;
    CHECK(total == doctest::Approx(expect));
}

TEST_CASE("conv geometry accounting") {
    Conv3dGeometry g{.in_channels = 3, .out_channels = 16, .depth = 32, .height = 128, .width = 64};
    CHECK(g.weight_size() == 16 * 3 * 27);
    CHECK(g.macs() == std::size_t{32} * 128 * 64 * 16 * 3 * 27);
}
