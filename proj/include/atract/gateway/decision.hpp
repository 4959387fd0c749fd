#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "atract/vitalgen/labels.hpp"

namespace atract::gateway {

enum class Severity { low, mild, severe };
enum class OperatorAction { pending, confirmed, overridden };

std::string_view to_string(Severity s);
std::string_view to_string(OperatorAction a);
std::optional<Severity> parse_severity(std::string_view s);
std::optional<OperatorAction> parse_operator_action(std::string_view s);

// Severity per action, indexed by the action enum.
using SeverityMap = std::array<Severity, vitalgen::kActionCount>;

// running, crawling -> low; limping, arm_injury -> mild; head_injury, walk_collapse -> severe.
SeverityMap default_severity_map();
// "action=severity" pairs separated by commas, applied over the defaults.
// Throws Error{config} on unknown names.
SeverityMap parse_severity_map(std::string_view spec);

struct TriageDecision {
    std::string id;
    int person_id = 0;
    vitalgen::ActionLabel predicted = vitalgen::ActionLabel::running;
    Severity predicted_severity = Severity::low;
    std::array<double, vitalgen::kActionCount> probabilities{};
    double stream_time = 0.0;  // end of the evaluated window [s]
    OperatorAction action = OperatorAction::pending;
    std::optional<Severity> operator_severity;  // set iff overridden
    double created_at = 0.0;                    // wall clock [s since epoch]
    std::optional<double> decided_at;

    Severity effective_severity() const { return operator_severity.value_or(predicted_severity); }
    friend bool operator==(const TriageDecision&, const TriageDecision&) = default;
};

nlohmann::json to_json(const TriageDecision& d);
// Throws Error{parse}.
TriageDecision decision_from_json(const nlohmann::json& j);

// The only admitted transitions are pending -> confirmed and pending -> overridden.
// Errors: already decided -> conflict; `to` pending, override without a
// severity, or confirm with one -> state.
TriageDecision apply_operator(const TriageDecision& d, OperatorAction to, std::optional<Severity> severity, double now);

}  // namespace atract::gateway
