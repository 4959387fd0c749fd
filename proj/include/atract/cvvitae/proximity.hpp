#pragma once

#include <vector>

#include <Eigen/Dense>

#include "atract/vitalgen/series.hpp"

namespace atract::cvvitae {

enum class ProximityScale {
    raw,       // physical units
    z_scored,  // divided by the pooled reference std of each feature
};

// m(j, c): mean over the augmented series of sum_t (x'_j(t) - xbar_{j,c}) / T,
// where xbar_{j,c} is the reference class-c mean of feature j over all of its
// series and timesteps. Rows are channels, columns clinical labels.
struct ProximityMatrix {
    Eigen::MatrixXd m;
    ProximityScale scale = ProximityScale::raw;

    // sum_j |m(j, c)| per clinical label; used for ranking.
    Eigen::VectorXd scores() const { return m.cwiseAbs().colwise().sum().transpose(); }
    // Label with the smallest score (lowest index on ties).
    vitalgen::ClinicalLabel nearest() const;
};

// Errors: empty augmented set or reference class, channel-count mismatch.
ProximityMatrix proximity_map(const std::vector<vitalgen::VitalSignSeries>& augmented,
                              const std::vector<vitalgen::VitalSignSeries>& reference,
                              ProximityScale scale = ProximityScale::raw);

}  // namespace atract::cvvitae
