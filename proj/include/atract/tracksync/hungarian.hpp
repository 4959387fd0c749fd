#pragma once

#include <vector>

#include <Eigen/Dense>

namespace atract::tracksync {

// Minimum-cost assignment on a rectangular cost matrix (rows x cols).
// Returns, for every row, its assigned column or -1 when rows > cols and the
// row is left over. Costs must be finite.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace atract::tracksync
