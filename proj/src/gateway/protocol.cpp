#include "atract/gateway/protocol.hpp"

#include "atract/common/error.hpp"

namespace atract::gateway {

using nlohmann::json;

namespace {

std::string line(json j, const char* type) {
    j["v"] = kProtocolVersion;
    j["type"] = type;
    return j.dump() + '\n';
}

json parse_versioned(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("malformed message: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::parse, "message is not an object");
    if (!j.contains("v") || j["v"] != kProtocolVersion)
        fail(ErrorKind::parse, "unsupported protocol version (want " + std::to_string(kProtocolVersion) + ")");
    if (!j.contains("type") || !j["type"].is_string()) fail(ErrorKind::parse, "message has no type");
    return j;
}

}  // namespace

std::string encode_hello(const std::string& session, const std::vector<PersonInfo>& persons, double t) {
    json ps = json::array();
    for (const auto& p : persons) ps.push_back({{"person_id", p.person_id}, {"subject_id", p.subject_id}});
    return line({{"session", session}, {"persons", ps}, {"t", t}}, "hello");
}

std::string encode_snapshot(const std::vector<TriageDecision>& decisions, double t) {
    json ds = json::array();
    for (const auto& d : decisions) ds.push_back(to_json(d));
    return line({{"t", t}, {"decisions", ds}}, "snapshot");
}

std::string encode_telemetry(const TelemetryPacket& p) {
    return line({{"subject_id", p.subject_id},
                 {"person_id", p.person_id},
                 {"seq", p.seq},
                 {"t", p.t},
                 {"hr", p.values[0]},
                 {"br", p.values[1]},
                 {"posture", p.values[2]},
                 {"movement", p.values[3]}},
                "telemetry");
}

std::string encode_clip_ref(const ClipRef& c) {
    return line({{"person_id", c.person_id}, {"frame", c.frame}, {"t", c.t}, {"path", c.path}}, "clip_ref");
}

std::string encode_prediction(const TriageDecision& latest, vitalgen::ActionLabel action, Severity severity,
                              const std::array<double, vitalgen::kActionCount>& probabilities, double t) {
    return line({{"person_id", latest.person_id},
                 {"t", t},
                 {"action", vitalgen::to_string(action)},
                 {"severity", to_string(severity)},
                 {"probabilities", probabilities},
                 {"decision", to_json(latest)}},
                "prediction");
}

std::string encode_ack(const TriageDecision& d) { return line({{"decision", to_json(d)}}, "ack"); }

std::string encode_error(std::string_view code, std::string_view message, std::string_view decision_id) {
    json j{{"code", code}, {"message", message}};
    if (!decision_id.empty()) j["decision_id"] = decision_id;
    return line(j, "error");
}

std::string encode_end(double t) { return line({{"t", t}}, "end"); }

std::string encode_confirm(const std::string& decision_id) { return line({{"decision_id", decision_id}}, "confirm"); }

std::string encode_override(const std::string& decision_id, Severity severity) {
    return line({{"decision_id", decision_id}, {"severity", to_string(severity)}}, "override");
}

ClientMessage parse_client_message(std::string_view text) {
    const auto j = parse_versioned(text);
    const auto type = j["type"].get<std::string>();
    ClientMessage m;
    if (type == "confirm") {
        m.action = OperatorAction::confirmed;
    } else if (type == "override") {
        m.action = OperatorAction::overridden;
        if (!j.contains("severity") || !j["severity"].is_string()) fail(ErrorKind::parse, "override needs a severity");
        m.severity = parse_severity(j["severity"].get<std::string>());
        if (!m.severity) fail(ErrorKind::parse, "unknown severity '" + j["severity"].get<std::string>() + "'");
    } else {
        fail(ErrorKind::parse, "unknown client message type '" + type + "'");
    }
    if (!j.contains("decision_id") || !j["decision_id"].is_string()) fail(ErrorKind::parse, type + " needs a decision_id");
    m.decision_id = j["decision_id"].get<std::string>();
    return m;
}

json parse_server_message(std::string_view text) { return parse_versioned(text); }

TelemetryPacket telemetry_from_json(const json& j) {
    try {
        TelemetryPacket p;
        p.subject_id = j.at("subject_id");
        p.person_id = j.at("person_id");
        p.seq = j.at("seq");
        p.t = j.at("t");
        p.values = {j.at("hr"), j.at("br"), j.at("posture"), j.at("movement")};
        return p;
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("telemetry: ") + e.what());
    }
}

}  // namespace atract::gateway
