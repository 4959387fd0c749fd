#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace atract::tracksync {

// Axis-aligned box, top-left corner plus size, in pixels.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double cx() const { return x + 0.5 * w; }
    double cy() const { return y + 0.5 * h; }
    friend bool operator==(const BBox&, const BBox&) = default;
};

double iou(const BBox& a, const BBox& b);

struct Detection {
    int frame = 0;
    BBox box;
    double confidence = 1.0;
    int raw_id = 0;  // detector-assigned, may churn
    friend bool operator==(const Detection&, const Detection&) = default;
};

// Newline-delimited records {"frame", "raw_id", "x", "y", "w", "h", "conf"}.
// Output is sorted by frame (stable). Blank lines are skipped; malformed
// records raise a parse error naming the line.
std::vector<Detection> read_detections(std::istream& in);
std::vector<Detection> read_detections(const std::filesystem::path& path);
void write_detections(const std::vector<Detection>& detections, std::ostream& out);
void write_detections(const std::vector<Detection>& detections, const std::filesystem::path& path);

}  // namespace atract::tracksync
