#include "atract/gateway/decision.hpp"

#include "atract/common/error.hpp"

namespace atract::gateway {

using vitalgen::ActionLabel;

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::low: return "low";
        case Severity::mild: return "mild";
        case Severity::severe: return "severe";
    }
    return "?";
}

std::string_view to_string(OperatorAction a) {
    switch (a) {
        case OperatorAction::pending: return "pending";
        case OperatorAction::confirmed: return "confirmed";
        case OperatorAction::overridden: return "overridden";
    }
    return "?";
}

std::optional<Severity> parse_severity(std::string_view s) {
    for (auto v : {Severity::low, Severity::mild, Severity::severe})
        if (to_string(v) == s) return v;
    return std::nullopt;
}

std::optional<OperatorAction> parse_operator_action(std::string_view s) {
    for (auto v : {OperatorAction::pending, OperatorAction::confirmed, OperatorAction::overridden})
        if (to_string(v) == s) return v;
    return std::nullopt;
}

SeverityMap default_severity_map() {
    SeverityMap m{};
    m[vitalgen::index(ActionLabel::running)] = Severity::low;
    m[vitalgen::index(ActionLabel::crawling)] = Severity::low;
    m[vitalgen::index(ActionLabel::limping)] = Severity::mild;
    m[vitalgen::index(ActionLabel::arm_injury)] = Severity::mild;
    m[vitalgen::index(ActionLabel::head_injury)] = Severity::severe;
    m[vitalgen::index(ActionLabel::walk_collapse)] = Severity::severe;
    return m;
}

SeverityMap parse_severity_map(std::string_view spec) {
    auto m = default_severity_map();
    std::size_t pos = 0;
    while (pos < spec.size()) {
        auto comma = spec.find(',', pos);
        if (comma == std::string_view::npos) comma = spec.size();
        const auto item = spec.substr(pos, comma - pos);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) fail(ErrorKind::config, "severity map entry '" + std::string(item) + "' lacks '='");
        const auto action = vitalgen::parse_action(item.substr(0, eq));
        const auto sev = parse_severity(item.substr(eq + 1));
        if (!action || !sev) fail(ErrorKind::config, "bad severity map entry '" + std::string(item) + "'");
        m[vitalgen::index(*action)] = *sev;
        pos = comma + 1;
    }
    return m;
}

nlohmann::json to_json(const TriageDecision& d) {
    nlohmann::json j{{"id", d.id},
                     {"person_id", d.person_id},
                     {"predicted", vitalgen::to_string(d.predicted)},
                     {"predicted_severity", to_string(d.predicted_severity)},
                     {"probabilities", d.probabilities},
                     {"stream_time", d.stream_time},
                     {"action", to_string(d.action)},
                     {"created_at", d.created_at}};
    j["operator_severity"] = d.operator_severity ? nlohmann::json(to_string(*d.operator_severity)) : nlohmann::json();
    j["decided_at"] = d.decided_at ? nlohmann::json(*d.decided_at) : nlohmann::json();
    return j;
}

TriageDecision decision_from_json(const nlohmann::json& j) {
    try {
        TriageDecision d;
        d.id = j.at("id");
        d.person_id = j.at("person_id");
        const auto predicted = vitalgen::parse_action(j.at("predicted").get<std::string>());
        const auto sev = parse_severity(j.at("predicted_severity").get<std::string>());
        const auto action = parse_operator_action(j.at("action").get<std::string>());
        if (!predicted || !sev || !action) fail(ErrorKind::parse, "decision " + d.id + ": unknown enum value");
        d.predicted = *predicted;
        d.predicted_severity = *sev;
        d.action = *action;
        d.probabilities = j.at("probabilities").get<std::array<double, vitalgen::kActionCount>>();
        d.stream_time = j.at("stream_time");
        d.created_at = j.at("created_at");
        if (!j.at("operator_severity").is_null()) {
            d.operator_severity = parse_severity(j.at("operator_severity").get<std::string>());
            if (!d.operator_severity) fail(ErrorKind::parse, "decision " + d.id + ": unknown operator severity");
        }
        if (!j.at("decided_at").is_null()) d.decided_at = j.at("decided_at").get<double>();
        if ((d.action == OperatorAction::overridden) != d.operator_severity.has_value())
            fail(ErrorKind::parse, "decision " + d.id + ": operator severity present iff overridden");
        return d;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("decision record: ") + e.what());
    }
}

TriageDecision apply_operator(const TriageDecision& d, OperatorAction to, std::optional<Severity> severity, double now) {
    if (d.action != OperatorAction::pending)
        fail(ErrorKind::conflict, "decision " + d.id + " is already " + std::string(to_string(d.action)));
    if (to == OperatorAction::pending) fail(ErrorKind::state, "decision " + d.id + ": cannot transition to pending");
    if (to == OperatorAction::overridden && !severity)
        fail(ErrorKind::state, "decision " + d.id + ": override needs a severity");
    if (to == OperatorAction::confirmed && severity)
        fail(ErrorKind::state, "decision " + d.id + ": confirm takes no severity");
    TriageDecision out = d;
    out.action = to;
    out.operator_severity = severity;
    out.decided_at = now;
    return out;
}

}  // namespace atract::gateway
