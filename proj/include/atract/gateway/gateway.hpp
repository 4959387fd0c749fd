#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atract/gateway/decision_log.hpp"
#include "atract/gateway/protocol.hpp"
#include "atract/gateway/session.hpp"

namespace atract::gateway {

struct ReplayOptions {
    double speed = 1.0;
    double loss_rate = 0.0;
    std::uint64_t seed = 0;
    double evaluation_period = 1.0;  // [s] of stream time between window evaluations
};

void validate(const ReplayOptions& options);

// Loss decision for one telemetry packet; depends only on (seed, subject, seq).
bool packet_dropped(std::uint64_t seed, std::string_view subject_id, std::uint64_t seq, double loss_rate);

enum class EventKind { telemetry, clip_ref, evaluate };

struct ReplayEvent {
    double t = 0.0;  // stream time [s]
    EventKind kind = EventKind::telemetry;
    std::size_t person = 0;  // index into Session::persons
    std::uint64_t index = 0;  // sample (telemetry) or frame (clip_ref)
};

// All replay events in stream-time order (telemetry, clip refs, then
// evaluations at equal times; persons in session order). Dropped telemetry is
// left out; the remaining sequence numbers keep their gaps.
std::vector<ReplayEvent> build_schedule(const Session& session, const ReplayOptions& options);

// Transport-independent gateway state: turns replay events into server
// messages and applies client decisions through the log.
class Gateway {
public:
    Gateway(Session session, DecisionLog& log, SeverityMap severities = default_severity_map());

    const Session& session() const { return session_; }
    DecisionLog& log() { return log_; }

    // hello followed by snapshot.
    std::string greeting(double t) const;
    // Server messages produced by one event.
    std::vector<std::string> on_event(const ReplayEvent& e);

    struct WindowResult {
        TriageDecision decision;  // the person's current decision
        bool created = false;
        vitalgen::ActionLabel action = vitalgen::ActionLabel::running;
        Severity severity = Severity::low;
        std::array<double, vitalgen::kActionCount> probabilities{};
    };
    // Fusion inference on the window ending at `t`. A pending decision is
    // created when the person has none yet or the predicted action differs from
    // their latest one. Empty while the window is incomplete.
    std::optional<WindowResult> predict_on_window(std::size_t person, double t);

    struct Reply {
        std::vector<std::string> broadcast;
        std::string direct;
    };
    Reply handle_client_line(std::string_view line);

private:
    Session session_;
    DecisionLog& log_;
    SeverityMap severities_;
    std::vector<std::optional<std::string>> latest_;  // per person, latest decision id
};

}  // namespace atract::gateway
