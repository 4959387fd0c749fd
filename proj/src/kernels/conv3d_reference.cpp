#include <limits>

#include "atract/kernels/conv3d.hpp"

namespace atract::kernels::reference {

namespace {

bool inside(int v, int n) { return v >= 0 && v < n; }

}  // namespace

void conv3d_forward(const Conv3dGeometry& g, std::span<const double> input,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> output) {
    const int p = g.pad();
    const int k = g.kernel;
    for (int o = 0; o < g.out_channels; ++o)
        for (int z = 0; z < g.depth; ++z)
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x) {
                    double sum = bias[o];
                    for (int i = 0; i < g.in_channels; ++i)
                        for (int kz = 0; kz < k; ++kz)
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx) {
                                    const int zi = z + kz - p, yi = y + ky - p, xi = x + kx - p;
                                    if (!inside(zi, g.depth) || !inside(yi, g.height) ||
                                        !inside(xi, g.width))
                                        continue;
                                    const std::size_t w =
                                        ((static_cast<std::size_t>(o) * g.in_channels + i) * k + kz) * k * k +
                                        static_cast<std::size_t>(ky) * k + kx;
                                    const std::size_t in =
                                        ((static_cast<std::size_t>(i) * g.depth + zi) * g.height + yi) * g.width + xi;
                                    sum += weight[w] * input[in];
                                }
                    output[((static_cast<std::size_t>(o) * g.depth + z) * g.height + y) * g.width + x] = sum;
                }
}

void conv3d_backward_input(const Conv3dGeometry& g, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input) {
    const int p = g.pad();
    const int k = g.kernel;
    for (auto& v : grad_input) v = 0.0;
    // Scatter form: every output gradient contributes to the inputs it read.
    for (int o = 0; o < g.out_channels; ++o)
        for (int z = 0; z < g.depth; ++z)
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x) {
                    const double go =
                        grad_output[((static_cast<std::size_t>(o) * g.depth + z) * g.height + y) * g.width + x];
                    for (int i = 0; i < g.in_channels; ++i)
                        for (int kz = 0; kz < k; ++kz)
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx) {
                                    const int zi = z + kz - p, yi = y + ky - p, xi = x + kx - p;
                                    if (!inside(zi, g.depth) || !inside(yi, g.height) ||
                                        !inside(xi, g.width))
                                        continue;
                                    const std::size_t w =
                                        ((static_cast<std::size_t>(o) * g.in_channels + i) * k + kz) * k * k +
                                        static_cast<std::size_t>(ky) * k + kx;
                                    grad_input[((static_cast<std::size_t>(i) * g.depth + zi) * g.height + yi) *
                                                   g.width + xi] += weight[w] * go;
                                }
                }
}

void conv3d_backward_weight(const Conv3dGeometry& g, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
    const int p = g.pad();
    const int k = g.kernel;
    for (int o = 0; o < g.out_channels; ++o)
        for (int z = 0; z < g.depth; ++z)
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x) {
                    const double go =
                        grad_output[((static_cast<std::size_t>(o) * g.depth + z) * g.height + y) * g.width + x];
                    grad_bias[o] += go;
                    for (int i = 0; i < g.in_channels; ++i)
                        for (int kz = 0; kz < k; ++kz)
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx) {
                                    const int zi = z + kz - p, yi = y + ky - p, xi = x + kx - p;
                                    if (!inside(zi, g.depth) || !inside(yi, g.height) ||
                                        !inside(xi, g.width))
                                        continue;
                                    const std::size_t w =
                                        ((static_cast<std::size_t>(o) * g.in_channels + i) * k + kz) * k * k +
                                        static_cast<std::size_t>(ky) * k + kx;
                                    grad_weight[w] +=
                                        go * input[((static_cast<std::size_t>(i) * g.depth + zi) * g.height + yi) *
                                                       g.width + xi];
                                }
                }
}

void maxpool3d_forward(const Pool3dGeometry& g, std::span<const double> input,
                       std::span<double> output, std::span<std::int32_t> argmax) {
    const int s = g.window;
    std::size_t out = 0;
    for (int c = 0; c < g.channels; ++c)
        for (int z = 0; z < g.out_depth(); ++z)
            for (int y = 0; y < g.out_height(); ++y)
                for (int x = 0; x < g.out_width(); ++x, ++out) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::int32_t best_at = -1;
                    for (int dz = 0; dz < s; ++dz)
                        for (int dy = 0; dy < s; ++dy)
                            for (int dx = 0; dx < s; ++dx) {
                                const auto at = static_cast<std::int32_t>(
                                    ((static_cast<std::size_t>(c) * g.depth + z * s + dz) * g.height + y * s + dy) *
                                        g.width + x * s + dx);
                                if (best_at < 0 || input[at] > best) {
                                    best = input[at];
                                    best_at = at;
                                }
                            }
                    output[out] = best;
                    argmax[out] = best_at;
                }
}

void maxpool3d_backward(const Pool3dGeometry& g, std::span<const double> grad_output,
                        std::span<const std::int32_t> argmax, std::span<double> grad_input) {
    for (auto& v : grad_input) v = 0.0;
    for (std::size_t o = 0; o < g.output_size(); ++o) grad_input[argmax[o]] += grad_output[o];
}

}  // namespace atract::kernels::reference
