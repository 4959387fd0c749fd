#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "atract/vitalgen/series.hpp"

namespace atract::vitalgen {

// Header of the vital-sign CSV format. Columns may appear in any order on
// read; writes always use this order.
inline constexpr std::string_view kCsvHeader = "t,hr_bpm,br_rpm,posture_deg,movement_g,label,subject_id";

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

void write_csv(const VitalSignSeries& series, std::ostream& out);
void write_csv(const VitalSignSeries& series, const std::filesystem::path& path);

// Throws Error{parse} naming the offending line (1-based, header is line 1).
// The sampling rate is recovered from the spacing of the t column.
VitalSignSeries read_csv(std::istream& in);
VitalSignSeries read_csv(const std::filesystem::path& path);

}  // namespace atract::vitalgen
