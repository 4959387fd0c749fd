#include "atract/vitalgen/series.hpp"

#include <cmath>
#include <sstream>

#include "atract/common/error.hpp"

namespace atract::vitalgen {

std::string label_name(const SeriesLabel& label) {
    if (auto* a = std::get_if<ActionLabel>(&label)) return std::string(to_string(*a));
    if (auto* c = std::get_if<ClinicalLabel>(&label)) return std::string(to_string(*c));
    return {};
}

SeriesLabel parse_label(std::string_view s) {
    if (s.empty()) return std::monostate{};
    if (auto a = parse_action(s)) return *a;
    if (auto c = parse_clinical(s)) return *c;
    fail(ErrorKind::parse, "unknown label '" + std::string(s) + "'");
}

bool operator==(const VitalSignSeries& a, const VitalSignSeries& b) {
    return a.samples.rows() == b.samples.rows() && a.samples.cols() == b.samples.cols() &&
           a.samples == b.samples && a.rate_hz == b.rate_hz && a.label == b.label &&
           a.subject_id == b.subject_id;
}

void validate(const VitalSignSeries& series) {
    const auto& x = series.samples;
    if (x.rows() < 1) fail(ErrorKind::parse, "series has no timesteps");
    if (x.cols() != static_cast<Eigen::Index>(kChannelCount)) {
        std::ostringstream os;
        os << "series has " << x.cols() << " channels, expected " << kChannelCount;
        fail(ErrorKind::parse, os.str());
    }
    if (!(series.rate_hz > 0.0) || !std::isfinite(series.rate_hz))
        fail(ErrorKind::parse, "sampling rate must be positive");
    for (auto c : kAllChannels) {
        const auto range = channel_range(c);
        for (Eigen::Index t = 0; t < x.rows(); ++t) {
            const double v = x(t, static_cast<Eigen::Index>(index(c)));
            if (!std::isfinite(v) || v < range.lo || v > range.hi) {
                std::ostringstream os;
                os << "timestep " << t << ": " << to_string(c) << "=" << v << " outside ["
                   << range.lo << ", " << range.hi << "]";
                fail(ErrorKind::parse, os.str());
            }
        }
    }
}

void clamp_to_range(Eigen::MatrixXd& samples) {
    for (auto c : kAllChannels) {
        const auto range = channel_range(c);
        auto col = samples.col(static_cast<Eigen::Index>(index(c)));
        col = col.cwiseMax(range.lo).cwiseMin(range.hi);
    }
}

}  // namespace atract::vitalgen
