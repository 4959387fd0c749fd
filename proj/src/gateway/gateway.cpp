#include "atract/gateway/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "atract/common/error.hpp"
#include "atract/common/rng.hpp"

namespace atract::gateway {

void validate(const ReplayOptions& o) {
    if (!(o.speed > 0.0)) fail(ErrorKind::config, "speed must be > 0");
    if (o.loss_rate < 0.0 || o.loss_rate >= 1.0) fail(ErrorKind::config, "loss_rate must be in [0, 1)");
    if (!(o.evaluation_period > 0.0)) fail(ErrorKind::config, "evaluation_period must be > 0");
}

bool packet_dropped(std::uint64_t seed, std::string_view subject_id, std::uint64_t seq, double loss_rate) {
    if (loss_rate <= 0.0) return false;
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : subject_id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    auto rng = substream(seed, {0x1055, h, seq});
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < loss_rate;
}

std::vector<ReplayEvent> build_schedule(const Session& session, const ReplayOptions& options) {
    validate(options);
    std::vector<ReplayEvent> events;
    for (std::size_t p = 0; p < session.persons.size(); ++p) {
        const auto& person = session.persons[p];
        const auto rows = static_cast<std::uint64_t>(person.sensors.samples.rows());
        for (std::uint64_t i = 0; i < rows; ++i)
            if (!packet_dropped(options.seed, person.subject_id, i, options.loss_rate))
                events.push_back({static_cast<double>(i) / person.sensors.rate_hz, EventKind::telemetry, p, i});
        for (int f = 0; f < person.clip.geometry.frames; ++f)
            events.push_back({(person.clip.start_frame + f) / person.clip.fps, EventKind::clip_ref, p,
                              static_cast<std::uint64_t>(f)});
    }
    const double end = session.duration();
    for (int k = 1; k * options.evaluation_period <= end + 1e-9; ++k)
        for (std::size_t p = 0; p < session.persons.size(); ++p)
            events.push_back({k * options.evaluation_period, EventKind::evaluate, p, 0});
    std::stable_sort(events.begin(), events.end(), [](const ReplayEvent& a, const ReplayEvent& b) {
        return std::tie(a.t, a.kind, a.person, a.index) < std::tie(b.t, b.kind, b.person, b.index);
    });
    return events;
}

Gateway::Gateway(Session session, DecisionLog& log, SeverityMap severities)
    : session_(std::move(session)), log_(log), severities_(severities), latest_(session_.persons.size()) {
    if (!session_.model) fail(ErrorKind::state, "session has no model");
    // resume per-person state from a recovered log
    for (const auto& d : log_.decisions())
        for (std::size_t p = 0; p < session_.persons.size(); ++p)
            if (session_.persons[p].person_id == d.person_id) latest_[p] = d.id;
}

std::string Gateway::greeting(double t) const {
    std::vector<PersonInfo> persons;
    for (const auto& p : session_.persons) persons.push_back({p.person_id, p.subject_id});
    return encode_hello(session_.dir.filename().string(), persons, t) + encode_snapshot(log_.decisions(), t);
}

std::optional<Gateway::WindowResult> Gateway::predict_on_window(std::size_t person, double t) {
    if (person >= session_.persons.size()) fail(ErrorKind::not_found, "no person at index " + std::to_string(person));
    const auto& model = *session_.model;
    const auto window = window_at(session_.persons[person], model.config(), t);
    if (!window) return std::nullopt;
    const auto pred = model.predict(*window);

    WindowResult r;
    r.action = pred.label;
    r.severity = severities_[vitalgen::index(pred.label)];
    for (std::size_t k = 0; k < r.probabilities.size(); ++k)
        r.probabilities[k] = pred.probabilities[static_cast<Eigen::Index>(k)];

    std::optional<TriageDecision> latest;
    if (latest_[person]) latest = log_.find(*latest_[person]);
    if (!latest || latest->predicted != pred.label) {
        TriageDecision d;
        d.person_id = session_.persons[person].person_id;
        d.predicted = r.action;
        d.predicted_severity = r.severity;
        d.probabilities = r.probabilities;
        d.stream_time = t;
        latest = log_.create(d);
        latest_[person] = latest->id;
        r.created = true;
    }
    r.decision = *latest;
    return r;
}

std::vector<std::string> Gateway::on_event(const ReplayEvent& e) {
    const auto& p = session_.persons.at(e.person);
    switch (e.kind) {
        case EventKind::telemetry: {
            TelemetryPacket pkt{p.subject_id, p.person_id, e.index, e.t, {}};
            for (std::size_t c = 0; c < pkt.values.size(); ++c)
                pkt.values[c] = p.sensors.samples(static_cast<Eigen::Index>(e.index), static_cast<Eigen::Index>(c));
            return {encode_telemetry(pkt)};
        }
        case EventKind::clip_ref: {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%03d.ppm", static_cast<int>(e.index));
            return {encode_clip_ref({p.person_id, static_cast<int>(e.index), e.t, (p.clip_dir / name).generic_string()})};
        }
        case EventKind::evaluate: {
            const auto r = predict_on_window(e.person, e.t);
            if (!r) return {};
            return {encode_prediction(r->decision, r->action, r->severity, r->probabilities, e.t)};
        }
    }
    return {};
}

Gateway::Reply Gateway::handle_client_line(std::string_view line) {
    Reply reply;
    std::string id;
    try {
        const auto msg = parse_client_message(line);
        id = msg.decision_id;
        const auto updated = log_.submit(msg.decision_id, msg.action, msg.severity);
        reply.broadcast.push_back(encode_ack(updated));
    } catch (const Error& e) {
        reply.direct = encode_error(to_string(e.kind()), e.what(), id);
    }
    return reply;
}

}  // namespace atract::gateway
