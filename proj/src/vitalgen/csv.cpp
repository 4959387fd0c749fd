#include "atract/vitalgen/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "atract/common/error.hpp"

namespace atract::vitalgen {

namespace {

constexpr std::array<std::string_view, kChannelCount> kColumn{"hr_bpm", "br_rpm", "posture_deg",
                                                              "movement_g"};

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

[[noreturn]] void row_error(std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << "line " << line << ": " << what;
    fail(ErrorKind::parse, os.str());
}

double parse_number(std::string_view field, std::size_t line, std::string_view column) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        row_error(line, "malformed number '" + std::string(field) + "' in column " +
                            std::string(column));
    return v;
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void write_csv(const VitalSignSeries& series, std::ostream& out) {
    validate(series);
    if (series.subject_id.find_first_of(",\n\r") != std::string::npos)
        fail(ErrorKind::parse, "subject_id must not contain separators");
    const std::string label = label_name(series.label);
    out << kCsvHeader << '\n';
    for (Eigen::Index t = 0; t < series.timesteps(); ++t) {
        out << format_double(static_cast<double>(t) / series.rate_hz);
        for (Eigen::Index c = 0; c < series.samples.cols(); ++c)
            out << ',' << format_double(series.samples(t, c));
        out << ',' << label << ',' << series.subject_id << '\n';
    }
}

void write_csv(const VitalSignSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    write_csv(series, out);
    if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

VitalSignSeries read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::parse, "line 1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split(line);
    auto find = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    };

    std::array<std::size_t, kChannelCount> col{};
    std::string missing;
    for (auto ch : kAllChannels) {
        auto pos = find(kColumn[index(ch)]);
        if (!pos) {
            if (!missing.empty()) missing += ", ";
            missing += std::string(kColumn[index(ch)]) + " (" + std::string(to_string(ch)) + ")";
        } else {
            col[index(ch)] = *pos;
        }
    }
    for (std::string_view required : {"t", "label", "subject_id"}) {
        if (!find(required)) {
            if (!missing.empty()) missing += ", ";
            missing += required;
        }
    }
    if (!missing.empty()) fail(ErrorKind::parse, "line 1: missing column(s): " + missing);
    const std::size_t t_col = *find("t");
    const std::size_t label_col = *find("label");
    const std::size_t subject_col = *find("subject_id");

    std::vector<std::array<double, kChannelCount>> rows;
    std::vector<double> times;
    VitalSignSeries s;
    std::string label_text;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != header.size()) {
            std::ostringstream os;
            os << "expected " << header.size() << " fields, got " << fields.size();
            row_error(line_no, os.str());
        }
        std::array<double, kChannelCount> row{};
        for (auto ch : kAllChannels) {
            const double v = parse_number(fields[col[index(ch)]], line_no, kColumn[index(ch)]);
            const auto range = channel_range(ch);
            if (!std::isfinite(v) || v < range.lo || v > range.hi) {
                std::ostringstream os;
                os << to_string(ch) << "=" << fields[col[index(ch)]] << " outside [" << range.lo
                   << ", " << range.hi << "]";
                row_error(line_no, os.str());
            }
            row[index(ch)] = v;
        }
        times.push_back(parse_number(fields[t_col], line_no, "t"));
        if (rows.empty()) {
            label_text = std::string(fields[label_col]);
            s.subject_id = std::string(fields[subject_col]);
        } else if (fields[label_col] != label_text || fields[subject_col] != s.subject_id) {
            row_error(line_no, "label/subject_id differ from first row");
        }
        rows.push_back(row);
    }
    if (rows.empty()) fail(ErrorKind::parse, "no data rows");

    try {
        s.label = parse_label(label_text);
    } catch (const Error& e) {
        row_error(2, e.what());
    }
    s.samples.resize(static_cast<Eigen::Index>(rows.size()), kChannelCount);
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t c = 0; c < kChannelCount; ++c)
            s.samples(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = rows[t][c];
    s.rate_hz = 1.0;
    if (times.size() >= 2) {
        const double dt = times[1] - times[0];
        if (!(dt > 0.0)) row_error(3, "t must be strictly increasing");
        s.rate_hz = 1.0 / dt;
    }
    return s;
}

VitalSignSeries read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    try {
        return read_csv(in);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::parse) fail(ErrorKind::parse, path.string() + ": " + e.what());
        throw;
    }
}

}  // namespace atract::vitalgen
