#pragma once

#include <filesystem>
#include <vector>

#include "atract/tracksync/detection.hpp"

namespace atract::tracksync {

// Interleaved RGB image, row-major, values in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> rgb;

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0.0f) {}

    float& at(int y, int x, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    friend bool operator==(const Image&, const Image&) = default;
};

// Binary PPM (P6, maxval 255). Values are quantized to 8 bits on write.
void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

// Bilinear resample of `box` (clipped sampling at the image border) to
// out_h x out_w.
Image crop_resize(const Image& src, const BBox& box, int out_h, int out_w);

}  // namespace atract::tracksync
