#include "atract/cvvitae/proximity.hpp"

#include <string>

#include "atract/common/error.hpp"

namespace atract::cvvitae {

using vitalgen::ClinicalLabel;
using vitalgen::kClinicalCount;

ClinicalLabel ProximityMatrix::nearest() const {
    Eigen::Index best = 0;
    scores().minCoeff(&best);
    return vitalgen::kAllClinical[static_cast<std::size_t>(best)];
}

ProximityMatrix proximity_map(const std::vector<vitalgen::VitalSignSeries>& augmented,
                              const std::vector<vitalgen::VitalSignSeries>& reference,
                              ProximityScale scale) {
    if (augmented.empty()) fail(ErrorKind::config, "proximity: augmented set is empty");
    const Eigen::Index d = augmented.front().samples.cols();

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(d, kClinicalCount);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(kClinicalCount);
    Eigen::VectorXd pooled_sum = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd pooled_sq = Eigen::VectorXd::Zero(d);
    for (const auto& s : reference) {
        const auto* c = std::get_if<ClinicalLabel>(&s.label);
        if (!c) fail(ErrorKind::config, "proximity: reference series '" + s.subject_id + "' is not clinical");
        if (s.samples.cols() != d) fail(ErrorKind::shape, "proximity: channel count mismatch");
        const auto k = static_cast<Eigen::Index>(vitalgen::index(*c));
        sums.col(k) += s.samples.colwise().sum().transpose();
        counts[k] += static_cast<double>(s.samples.rows());
        pooled_sum += s.samples.colwise().sum().transpose();
        pooled_sq += s.samples.array().square().colwise().sum().matrix().transpose();
    }
    for (auto c : vitalgen::kAllClinical)
        if (counts[static_cast<Eigen::Index>(vitalgen::index(c))] == 0.0)
            fail(ErrorKind::config,
                 "proximity: reference class '" + std::string(vitalgen::to_string(c)) + "' is empty");

    const Eigen::MatrixXd class_mean = sums.array().rowwise() / counts.transpose().array();
    Eigen::VectorXd aug_mean = Eigen::VectorXd::Zero(d);
    for (const auto& s : augmented) {
        if (s.samples.cols() != d) fail(ErrorKind::shape, "proximity: channel count mismatch");
        if (s.samples.rows() == 0) fail(ErrorKind::shape, "proximity: empty augmented series");
        aug_mean += s.samples.colwise().mean().transpose();
    }
    aug_mean /= static_cast<double>(augmented.size());

    ProximityMatrix out;
    out.scale = scale;
    out.m = (-class_mean).colwise() + aug_mean;
    if (scale == ProximityScale::z_scored) {
        const double n = counts.sum();
        const Eigen::VectorXd mean = pooled_sum / n;
        const Eigen::VectorXd sd =
            (pooled_sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-12);
        out.m = out.m.array().colwise() / sd.array();
    }
    return out;
}

}  // namespace atract::cvvitae
