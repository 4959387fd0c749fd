#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "atract/gateway/decision.hpp"

namespace atract::gateway {

// Newline-delimited JSON, one message per line, every message carrying
// {"v": kProtocolVersion, "type": ...}.
//
// server -> client
//   hello      {session, persons: [{person_id, subject_id}], t}
//   snapshot   {t, decisions: [decision...]}             sent after hello
//   telemetry  {subject_id, person_id, seq, t, hr, br, posture, movement}
//   clip_ref   {person_id, frame, t, path}
//   prediction {person_id, t, action, severity, probabilities, decision}
//   ack        {decision}                                broadcast after a persisted submit
//   error      {code, message, decision_id?}             to the submitting client only
//   end        {t}                                       replay finished
// client -> server
//   confirm    {decision_id}
//   override   {decision_id, severity}
inline constexpr int kProtocolVersion = 1;

struct TelemetryPacket {
    std::string subject_id;
    int person_id = 0;
    std::uint64_t seq = 0;
    double t = 0.0;
    std::array<double, vitalgen::kChannelCount> values{};
    friend bool operator==(const TelemetryPacket&, const TelemetryPacket&) = default;
};

struct ClipRef {
    int person_id = 0;
    int frame = 0;
    double t = 0.0;
    std::string path;
};

struct PersonInfo {
    int person_id = 0;
    std::string subject_id;
};

std::string encode_hello(const std::string& session, const std::vector<PersonInfo>& persons, double t);
std::string encode_snapshot(const std::vector<TriageDecision>& decisions, double t);
std::string encode_telemetry(const TelemetryPacket& p);
std::string encode_clip_ref(const ClipRef& c);
std::string encode_prediction(const TriageDecision& latest, vitalgen::ActionLabel action, Severity severity,
                              const std::array<double, vitalgen::kActionCount>& probabilities, double t);
std::string encode_ack(const TriageDecision& d);
std::string encode_error(std::string_view code, std::string_view message, std::string_view decision_id = {});
std::string encode_end(double t);

struct ClientMessage {
    OperatorAction action = OperatorAction::confirmed;  // confirmed or overridden
    std::string decision_id;
    std::optional<Severity> severity;
};

std::string encode_confirm(const std::string& decision_id);
std::string encode_override(const std::string& decision_id, Severity severity);

// Errors: malformed JSON, wrong version, unknown type or missing fields -> parse.
ClientMessage parse_client_message(std::string_view line);
// Any server message; checks the version and that "type" is present.
nlohmann::json parse_server_message(std::string_view line);
TelemetryPacket telemetry_from_json(const nlohmann::json& j);

}  // namespace atract::gateway
