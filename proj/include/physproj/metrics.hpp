#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace physproj {

/// Column-wise root-mean-square error.
Eigen::VectorXd rmse_per_output(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);
/// Root-mean-square error over all elements.
double rmse(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);

struct ImprovementRates {
  double r_mean = 0.0;  // % of rows whose mean RMSE decreased
  double r_all = 0.0;   // % of rows where every column's RMSE decreased
};

/// Rows are trajectories (or runs), columns are state variables.
ImprovementRates improvement_rates(const Eigen::MatrixXd& base_rmse, const Eigen::MatrixXd& projected_rmse);

/// 100 * (projected - base) / base; negative when the projection helps.
double rmse_variation_rate(double base, double projected);

struct SplitIndices {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> validation;
  std::vector<Eigen::Index> test;
};

/// Seeded shuffle followed by a contiguous split.
SplitIndices split_indices(Eigen::Index n, const std::array<double, 3>& fractions, std::uint64_t seed);

} // namespace physproj
