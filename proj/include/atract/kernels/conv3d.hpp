#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Spatio-temporal kernels used by the video encoder. Tensors are dense
// channel-major volumes [C][D][H][W]; convolution weights are laid out
// [out][in][kd][kh][kw]. Convolutions use stride 1 and "same" zero padding.
//
// `reference` holds plain serial loops written for obviousness; `parallel`
// holds the OpenMP kernels used in training and inference. Each output element
// of a parallel kernel is produced by exactly one thread in a fixed order, so
// results do not depend on the thread count.

namespace atract::kernels {

struct Conv3dGeometry {
    int in_channels = 0;
    int out_channels = 0;
    int depth = 0;
    int height = 0;
    int width = 0;
    int kernel = 3;  // odd

    int pad() const { return kernel / 2; }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    std::size_t volume() const { return plane() * depth; }
    std::size_t input_size() const { return volume() * in_channels; }
    std::size_t output_size() const { return volume() * out_channels; }
    std::size_t taps() const { return static_cast<std::size_t>(kernel) * kernel * kernel; }
    std::size_t weight_size() const { return taps() * in_channels * out_channels; }
    std::size_t macs() const { return output_size() * taps() * in_channels; }
};

// Non-overlapping max pooling with a cubic window; trailing remainders dropped.
struct Pool3dGeometry {
    int channels = 0;
    int depth = 0;
    int height = 0;
    int width = 0;
    int window = 2;

    int out_depth() const { return depth / window; }
    int out_height() const { return height / window; }
    int out_width() const { return width / window; }
    std::size_t input_size() const {
        return static_cast<std::size_t>(channels) * depth * height * width;
    }
    std::size_t output_size() const {
        return static_cast<std::size_t>(channels) * out_depth() * out_height() * out_width();
    }
};

namespace reference {

void conv3d_forward(const Conv3dGeometry& g, std::span<const double> input,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> output);
// Overwrites `grad_input`.
void conv3d_backward_input(const Conv3dGeometry& g, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
// Accumulates into `grad_weight` and `grad_bias`.
void conv3d_backward_weight(const Conv3dGeometry& g, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);

// `argmax` receives the flat input index selected for each output element.
void maxpool3d_forward(const Pool3dGeometry& g, std::span<const double> input,
                       std::span<double> output, std::span<std::int32_t> argmax);
// Overwrites `grad_input`.
void maxpool3d_backward(const Pool3dGeometry& g, std::span<const double> grad_output,
                        std::span<const std::int32_t> argmax, std::span<double> grad_input);

}  // namespace reference

namespace parallel {

void conv3d_forward(const Conv3dGeometry& g, std::span<const double> input,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> output);
void conv3d_backward_input(const Conv3dGeometry& g, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
void conv3d_backward_weight(const Conv3dGeometry& g, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);
void maxpool3d_forward(const Pool3dGeometry& g, std::span<const double> input,
                       std::span<double> output, std::span<std::int32_t> argmax);
void maxpool3d_backward(const Pool3dGeometry& g, std::span<const double> grad_output,
                        std::span<const std::int32_t> argmax, std::span<double> grad_input);

}  // namespace parallel

}  // namespace atract::kernels
