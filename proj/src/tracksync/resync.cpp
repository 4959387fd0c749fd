#include "atract/tracksync/resync.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "atract/common/error.hpp"
#include "atract/tracksync/hungarian.hpp"

namespace atract::tracksync {

void validate(const SyncParams& p) {
    if (p.max_gap_frames < 0) fail(ErrorKind::config, "max_gap_frames must be >= 0");
    if (!(p.gate_radius > 0.0) || p.gate_growth < 0.0) fail(ErrorKind::config, "gate radius must be positive");
    if (p.velocity_window < 2) fail(ErrorKind::config, "velocity_window must be >= 2");
    if (!(p.iou_gate > 0.0) || p.iou_gate > 1.0) fail(ErrorKind::config, "iou_gate must be in (0, 1]");
    if (p.distance_weight < 0.0 || p.iou_weight < 0.0 || p.velocity_weight < 0.0)
        fail(ErrorKind::config, "cost weights must be >= 0");
    if (!(p.velocity_scale > 0.0)) fail(ErrorKind::config, "velocity_scale must be positive");
}

std::optional<BBox> Track::at(int frame) const {
    auto it = std::lower_bound(observations.begin(), observations.end(), frame,
                               [](const TrackedBox& o, int f) { return o.frame < f; });
    if (it == observations.end() || it->frame != frame) return std::nullopt;
    return it->box;
}

namespace {

// Least-squares line through the centroids of the last `window` observations.
// Predictions are taken from the line rather than the last observation, so a
// single noisy or mismatched detection does not drag the track along.
struct Motion {
    double frame = 0.0;  // mean frame of the fitted observations
    double cx = 0.0;     // fitted centroid at `frame`
    double cy = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double x_at(double f) const { return cx + vx * (f - frame); }
    double y_at(double f) const { return cy + vy * (f - frame); }
};

Motion fit_motion(const Track& t, int window) {
    const auto& obs = t.observations;
    const std::size_t n = std::min<std::size_t>(obs.size(), static_cast<std::size_t>(window));
    Motion m;
    for (std::size_t i = obs.size() - n; i < obs.size(); ++i) {
        m.frame += obs[i].frame;
        m.cx += obs[i].box.cx();
        m.cy += obs[i].box.cy();
    }
    m.frame /= static_cast<double>(n);
    m.cx /= static_cast<double>(n);
    m.cy /= static_cast<double>(n);
    if (n < 2) return m;
    double sff = 0.0, sfx = 0.0, sfy = 0.0;
    for (std::size_t i = obs.size() - n; i < obs.size(); ++i) {
        const double df = obs[i].frame - m.frame;
        sff += df * df;
        sfx += df * (obs[i].box.cx() - m.cx);
        sfy += df * (obs[i].box.cy() - m.cy);
    }
    m.vx = sfx / sff;
    m.vy = sfy / sff;
    return m;
}

bool canonical_less(const Detection& a, const Detection& b) {
    return std::tie(a.frame, a.box.x, a.box.y, a.box.w, a.box.h, a.confidence, a.raw_id) <
           std::tie(b.frame, b.box.x, b.box.y, b.box.w, b.box.h, b.confidence, b.raw_id);
}

constexpr double kInfeasible = 1e9;

}  // namespace

TrackSet resynchronize(const std::vector<Detection>& stream, const SyncParams& params) {
    validate(params);
    TrackSet out;
    out.person_of.assign(stream.size(), 0);
    if (stream.empty()) return out;

    std::vector<std::size_t> order(stream.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return canonical_less(stream[a], stream[b]); });

    std::vector<std::size_t> live;  // indices into out.persons
    std::size_t pos = 0;
    while (pos < order.size()) {
        const int frame = stream[order[pos]].frame;
        std::vector<std::size_t> dets;
        while (pos < order.size() && stream[order[pos]].frame == frame) dets.push_back(order[pos++]);

        std::erase_if(live, [&](std::size_t t) {
            return frame - out.persons[t].last_frame() - 1 > params.max_gap_frames;
        });

        Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(live.size()),
                                                         static_cast<Eigen::Index>(dets.size()), kInfeasible);
        for (std::size_t r = 0; r < live.size(); ++r) {
            const Track& track = out.persons[live[r]];
            const BBox& last = track.observations.back().box;
            const Motion v = fit_motion(track, params.velocity_window);
            const int k = frame - track.last_frame();
            const double lx = v.x_at(track.last_frame()), ly = v.y_at(track.last_frame());
            const double px = v.x_at(frame), py = v.y_at(frame);
            const BBox predicted{px - 0.5 * last.w, py - 0.5 * last.h, last.w, last.h};
            const double radius = params.gate_radius + params.gate_growth * (k - 1);
            for (std::size_t c = 0; c < dets.size(); ++c) {
                const BBox& b = stream[dets[c]].box;
                const double dn = std::hypot(b.cx() - px, b.cy() - py) / radius;
                const double overlap = iou(predicted, b);
                if (dn > 1.0 && overlap < params.iou_gate) continue;
                const double dvx = (b.cx() - lx) / k - v.vx;
                const double dvy = (b.cy() - ly) / k - v.vy;
                cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    params.distance_weight * dn + params.iou_weight * (1.0 - overlap) +
                    params.velocity_weight * std::hypot(dvx, dvy) / params.velocity_scale;
            }
        }

        const auto assignment = solve_assignment(cost);
        std::vector<char> taken(dets.size(), 0);
        for (std::size_t r = 0; r < live.size(); ++r) {
            const int c = assignment[r];
            if (c < 0 || cost(static_cast<Eigen::Index>(r), c) >= kInfeasible) continue;
            taken[static_cast<std::size_t>(c)] = 1;
            Track& track = out.persons[live[r]];
            const std::size_t d = dets[static_cast<std::size_t>(c)];
            track.observations.push_back({frame, stream[d].box, d});
            out.person_of[d] = track.person_id;
        }
        for (std::size_t c = 0; c < dets.size(); ++c) {
            if (taken[c]) continue;
            const std::size_t d = dets[c];
            Track track;
            track.person_id = static_cast<int>(out.persons.size()) + 1;
            track.observations.push_back({frame, stream[d].box, d});
            out.person_of[d] = track.person_id;
            live.push_back(out.persons.size());
            out.persons.push_back(std::move(track));
        }
        std::sort(live.begin(), live.end());
        out.frame_count = frame + 1;
    }
    return out;
}

double identity_recovery(const TrackSet& tracks, const std::vector<int>& truth) {
    if (truth.size() != tracks.person_of.size())
        fail(ErrorKind::shape, "identity_recovery: truth does not match the detection count");
    if (truth.empty()) return 1.0;
    std::map<int, int> truth_index;
    for (int t : truth) truth_index.emplace(t, static_cast<int>(truth_index.size()));
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tracks.persons.size()),
                                                   static_cast<Eigen::Index>(truth_index.size()));
    for (std::size_t i = 0; i < truth.size(); ++i)
        counts(tracks.person_of[i] - 1, truth_index[truth[i]]) += 1.0;
    const auto match = solve_assignment(-counts);
    double agreed = 0.0;
    for (Eigen::Index r = 0; r < counts.rows(); ++r)
        if (match[static_cast<std::size_t>(r)] >= 0) agreed += counts(r, match[static_cast<std::size_t>(r)]);
    return agreed / static_cast<double>(truth.size());
}

}  // namespace atract::tracksync
