#include "physproj/metrics.hpp"

#include "physproj/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace physproj {

Eigen::VectorXd rmse_per_output(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  require_shape(prediction.rows() == target.rows() && prediction.cols() == target.cols(),
                "rmse: shape mismatch");
  require_shape(prediction.rows() > 0, "rmse: empty input");
  return ((prediction - target).array().square().colwise().mean()).sqrt().transpose();
}

double rmse(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  require_shape(prediction.rows() == target.rows() && prediction.cols() == target.cols(),
                "rmse: shape mismatch");
  require_shape(prediction.size() > 0, "rmse: empty input");
  return std::sqrt((prediction - target).squaredNorm() / static_cast<double>(prediction.size()));
}

ImprovementRates improvement_rates(const Eigen::MatrixXd& base, const Eigen::MatrixXd& projected) {
  require_shape(base.rows() == projected.rows() && base.cols() == projected.cols(),
                "improvement_rates: shape mismatch");
  ImprovementRates rates;
  if (base.rows() == 0) return rates;
  int mean_better = 0, all_better = 0;
  for (Eigen::Index r = 0; r < base.rows(); ++r) {
    if (projected.row(r).mean() < base.row(r).mean()) ++mean_better;
    if ((projected.row(r).array() < base.row(r).array()).all()) ++all_better;
  }
  const double n = static_cast<double>(base.rows());
  rates.r_mean = 100.0 * mean_better / n;
  rates.r_all = 100.0 * all_better / n;
  return rates;
}

double rmse_variation_rate(double base, double projected) {
  require(base != 0.0, "rmse_variation_rate: base RMSE is zero");
  return 100.0 * (projected - base) / base;
}

SplitIndices split_indices(Eigen::Index n, const std::array<double, 3>& fractions, std::uint64_t seed) {
  for (double f : fractions) require(f >= 0.0 && f <= 1.0, "split fractions must lie in [0, 1]");
  require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) <= 1e-9,
          "split fractions must sum to 1");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  const auto n_val = std::min(order.size() - n_train,
                              static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))));
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  if ((fractions[0] > 0 && split.train.empty()) || (fractions[1] > 0 && split.validation.empty()) ||
      (fractions[2] > 0 && split.test.empty()))
    throw ValidationError("split_dataset: dataset too small for a non-empty split");
  return split;
}

} // namespace physproj
