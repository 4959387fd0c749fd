#include "atract/tracksync/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "atract/common/error.hpp"

namespace atract::tracksync {

void write_ppm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string());
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<unsigned char> bytes(img.rgb.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(img.rgb[i], 0.0f, 1.0f) * 255.0f));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "write failed: " + path.string());
}

namespace {

int read_header_int(std::istream& in, const std::string& where) {
    in >> std::ws;
    while (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        in >> std::ws;
    }
    int v = 0;
    if (!(in >> v) || v <= 0) fail(ErrorKind::parse, where + ": bad PPM header");
    return v;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P6") fail(ErrorKind::parse, path.string() + ": not a binary PPM");
    const int w = read_header_int(in, path.string());
    const int h = read_header_int(in, path.string());
    const int maxval = read_header_int(in, path.string());
    if (maxval != 255) fail(ErrorKind::parse, path.string() + ": only 8-bit PPM is supported");
    in.get();
    Image img(w, h);
    std::vector<unsigned char> bytes(img.rgb.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        fail(ErrorKind::parse, path.string() + ": truncated pixel data");
    for (std::size_t i = 0; i < bytes.size(); ++i) img.rgb[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

Image crop_resize(const Image& src, const BBox& box, int out_h, int out_w) {
    if (src.width <= 0 || src.height <= 0) fail(ErrorKind::shape, "crop_resize: empty source image");
    if (out_h <= 0 || out_w <= 0) fail(ErrorKind::shape, "crop_resize: empty output size");
    Image out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        // pixel centers mapped into the box
        const double sy = std::clamp(box.y + (y + 0.5) * box.h / out_h - 0.5, 0.0, src.height - 1.0);
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double sx = std::clamp(box.x + (x + 0.5) * box.w / out_w - 0.5, 0.0, src.width - 1.0);
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1 - fx) * src.at(y0, x0, c) + fx * src.at(y0, x1, c);
                const double bottom = (1 - fx) * src.at(y1, x0, c) + fx * src.at(y1, x1, c);
                out.at(y, x, c) = static_cast<float>((1 - fy) * top + fy * bottom);
            }
        }
    }
    return out;
}

}  // namespace atract::tracksync
