#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

#include "atract/vitalgen/labels.hpp"

namespace atract::vitalgen {

using SeriesLabel = std::variant<std::monostate, ActionLabel, ClinicalLabel>;

std::string label_name(const SeriesLabel& label);
// Accepts an action name, a clinical name, or the empty string.
SeriesLabel parse_label(std::string_view s);

// T timesteps x D channels, canonical channel order (see Channel).
struct VitalSignSeries {
    Eigen::MatrixXd samples;
    double rate_hz = 1.0;
    SeriesLabel label;
    std::string subject_id;

    Eigen::Index timesteps() const { return samples.rows(); }
    auto channel(Channel c) { return samples.col(static_cast<Eigen::Index>(index(c))); }
    auto channel(Channel c) const { return samples.col(static_cast<Eigen::Index>(index(c))); }

    friend bool operator==(const VitalSignSeries& a, const VitalSignSeries& b);
};

// Throws Error{parse} describing the first violated invariant.
void validate(const VitalSignSeries& series);

// Clamps every channel into its admissible range.
void clamp_to_range(Eigen::MatrixXd& samples);

}  // namespace atract::vitalgen
