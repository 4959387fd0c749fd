#include <algorithm>
#include <limits>

#include "atract/kernels/conv3d.hpp"

namespace atract::kernels::parallel {

namespace {

// Valid output range [lo, hi) along one axis for kernel tap `kt`.
struct Span1 {
    int lo;
    int hi;
};

Span1 valid_range(int n, int kt, int pad) {
    return {std::max(0, pad - kt), std::min(n, n + pad - kt)};
}

}  // namespace

void conv3d_forward(const Conv3dGeometry& g, std::span<const double> input,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> output) {
    const int p = g.pad();
    const int k = g.kernel;
    const int depth = g.depth, height = g.height, width = g.width;
    const std::size_t plane = g.plane();
    const double* in = input.data();
    const double* wt = weight.data();
    double* out = output.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < g.out_channels; ++o) {
        for (int z = 0; z < depth; ++z) {
            double* dst = out + (static_cast<std::size_t>(o) * depth + z) * plane;
            std::fill(dst, dst + plane, bias[o]);
            for (int i = 0; i < g.in_channels; ++i) {
                for (int kz = 0; kz < k; ++kz) {
                    const int zi = z + kz - p;
                    if (zi < 0 || zi >= depth) continue;
                    const double* src = in + (static_cast<std::size_t>(i) * depth + zi) * plane;
                    const double* w = wt + ((static_cast<std::size_t>(o) * g.in_channels + i) * k + kz) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const auto ys = valid_range(height, ky, p);
                        for (int kx = 0; kx < k; ++kx) {
                            const double wv = w[ky * k + kx];
                            const auto xs = valid_range(width, kx, p);
                            for (int y = ys.lo; y < ys.hi; ++y) {
                                double* row = dst + static_cast<std::size_t>(y) * width;
                                const double* srow = src + static_cast<std::size_t>(y + ky - p) * width + (kx - p);
                                for (int x = xs.lo; x < xs.hi; ++x) row[x] += wv * srow[x];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv3d_backward_input(const Conv3dGeometry& g, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input) {
    const int p = g.pad();
    const int k = g.kernel;
    const int depth = g.depth, height = g.height, width = g.width;
    const std::size_t plane = g.plane();
    const double* gout = grad_output.data();
    const double* wt = weight.data();
    double* gin = grad_input.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int i = 0; i < g.in_channels; ++i) {
        for (int z = 0; z < depth; ++z) {
            double* dst = gin + (static_cast<std::size_t>(i) * depth + z) * plane;
            std::fill(dst, dst + plane, 0.0);
            for (int o = 0; o < g.out_channels; ++o) {
                for (int kz = 0; kz < k; ++kz) {
                    const int zo = z - kz + p;
                    if (zo < 0 || zo >= depth) continue;
                    const double* src = gout + (static_cast<std::size_t>(o) * depth + zo) * plane;
                    const double* w = wt + ((static_cast<std::size_t>(o) * g.in_channels + i) * k + kz) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        // input row y receives from output row y - ky + p
                        const int ylo = std::max(0, ky - p), yhi = std::min(height, height + ky - p);
                        for (int kx = 0; kx < k; ++kx) {
                            const double wv = w[ky * k + kx];
                            const int xlo = std::max(0, kx - p), xhi = std::min(width, width + kx - p);
                            for (int y = ylo; y < yhi; ++y) {
                                double* row = dst + static_cast<std::size_t>(y) * width;
                                const double* srow = src + static_cast<std::size_t>(y - ky + p) * width - (kx - p);
                                for (int x = xlo; x < xhi; ++x) row[x] += wv * srow[x];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv3d_backward_weight(const Conv3dGeometry& g, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
    const int p = g.pad();
    const int k = g.kernel;
    const int depth = g.depth, height = g.height, width = g.width;
    const std::size_t plane = g.plane();
    const double* in = input.data();
    const double* gout = grad_output.data();
    double* gw = grad_weight.data();

#pragma omp parallel for schedule(static)
    for (int o = 0; o < g.out_channels; ++o) {
        const double* src = gout + static_cast<std::size_t>(o) * depth * plane;
        double acc = 0.0;
        for (std::size_t n = 0; n < depth * plane; ++n) acc += src[n];
        grad_bias[o] += acc;
    }

#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < g.out_channels; ++o) {
        for (int i = 0; i < g.in_channels; ++i) {
            double* w = gw + (static_cast<std::size_t>(o) * g.in_channels + i) * k * k * k;
            for (int kz = 0; kz < k; ++kz) {
                for (int ky = 0; ky < k; ++ky) {
                    const auto ys = valid_range(height, ky, p);
                    for (int kx = 0; kx < k; ++kx) {
                        const auto xs = valid_range(width, kx, p);
                        double acc = 0.0;
                        for (int z = 0; z < depth; ++z) {
                            const int zi = z + kz - p;
                            if (zi < 0 || zi >= depth) continue;
                            const double* go = gout + (static_cast<std::size_t>(o) * depth + z) * plane;
                            const double* src = in + (static_cast<std::size_t>(i) * depth + zi) * plane;
                            for (int y = ys.lo; y < ys.hi; ++y) {
                                const double* grow = go + static_cast<std::size_t>(y) * width;
                                const double* srow = src + static_cast<std::size_t>(y + ky - p) * width + (kx - p);
                                for (int x = xs.lo; x < xs.hi; ++x) acc += grow[x] * srow[x];
                            }
                        }
                        w[(kz * k + ky) * k + kx] += acc;
                    }
                }
            }
        }
    }
}

void maxpool3d_forward(const Pool3dGeometry& g, std::span<const double> input,
                       std::span<double> output, std::span<std::int32_t> argmax) {
    const int s = g.window;
    const int od = g.out_depth(), oh = g.out_height(), ow = g.out_width();
    const int channels = g.channels;
    const std::size_t plane = static_cast<std::size_t>(g.height) * g.width;
    const std::size_t width = static_cast<std::size_t>(g.width);
    const std::size_t in_volume = plane * g.depth;
    const double* in = input.data();
    double* out = output.data();
    std::int32_t* arg = argmax.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int c = 0; c < channels; ++c) {
        for (int z = 0; z < od; ++z) {
            const std::size_t base = c * in_volume + static_cast<std::size_t>(z) * s * plane;
            std::size_t o = ((static_cast<std::size_t>(c) * od + z) * oh) * ow;
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x, ++o) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_at = 0;
                    bool first = true;
                    for (int dz = 0; dz < s; ++dz)
                        for (int dy = 0; dy < s; ++dy) {
                            const std::size_t row = base + dz * plane + (static_cast<std::size_t>(y) * s + dy) * width +
                                                    static_cast<std::size_t>(x) * s;
                            for (int dx = 0; dx < s; ++dx) {
                                const double v = in[row + dx];
                                if (first || v > best) {
                                    best = v;
                                    best_at = row + dx;
                                    first = false;
                                }
                            }
                        }
                    out[o] = best;
                    arg[o] = static_cast<std::int32_t>(best_at);
                }
            }
        }
    }
}

void maxpool3d_backward(const Pool3dGeometry& g, std::span<const double> grad_output,
                        std::span<const std::int32_t> argmax, std::span<double> grad_input) {
    const std::size_t per_in = grad_input.size() / static_cast<std::size_t>(g.channels);
    const std::size_t per_out = g.output_size() / static_cast<std::size_t>(g.channels);
    // Windows never straddle channels, so each channel is an independent scatter.
#pragma omp parallel for schedule(static)
    for (int c = 0; c < g.channels; ++c) {
        std::fill(grad_input.begin() + static_cast<std::ptrdiff_t>(c * per_in),
                  grad_input.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_in), 0.0);
        for (std::size_t o = c * per_out; o < (c + 1) * per_out; ++o)
            grad_input[argmax[o]] += grad_output[o];
    }
}

}  // namespace atract::kernels::parallel
