#include "atract/tracksync/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "json.hpp"

#include "atract/common/error.hpp"

namespace atract::tracksync {

double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

Detection parse_record(const std::string& line, std::size_t lineno) {
    const auto where = "detections line " + std::to_string(lineno) + ": ";
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, where + "invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) fail(ErrorKind::parse, where + "expected an object");
    auto number = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) fail(ErrorKind::parse, where + "missing numeric '" + key + "'");
        const double v = j[key].get<double>();
        if (!std::isfinite(v)) fail(ErrorKind::parse, where + "non-finite '" + key + "'");
        return v;
    };
    auto integer = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number_integer())
            fail(ErrorKind::parse, where + "missing integer '" + key + "'");
        return j[key].get<long long>();
    };
    Detection d;
    const auto frame = integer("frame");
    if (frame < 0 || frame > 100000000) fail(ErrorKind::parse, where + "frame out of range");
    d.frame = static_cast<int>(frame);
    d.raw_id = static_cast<int>(integer("raw_id"));
    d.box = {number("x"), number("y"), number("w"), number("h")};
    d.confidence = j.contains("conf") ? number("conf") : 1.0;
    if (d.box.w <= 0.0 || d.box.h <= 0.0) fail(ErrorKind::parse, where + "box width and height must be > 0");
    if (d.confidence < 0.0 || d.confidence > 1.0) fail(ErrorKind::parse, where + "conf outside [0, 1]");
    return d;
}

}  // namespace

std::vector<Detection> read_detections(std::istream& in) {
    std::vector<Detection> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_record(line, lineno));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
    return out;
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    return read_detections(in);
}

void write_detections(const std::vector<Detection>& detections, std::ostream& out) {
    for (const auto& d : detections) {
        const nlohmann::json j = {{"frame", d.frame}, {"raw_id", d.raw_id}, {"x", d.box.x}, {"y", d.box.y},
                                  {"w", d.box.w},     {"h", d.box.h},       {"conf", d.confidence}};
        out << j.dump() << '\n';
    }
}

void write_detections(const std::vector<Detection>& detections, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string());
    write_detections(detections, out);
}

}  // namespace atract::tracksync
