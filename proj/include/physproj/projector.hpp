#pragma once

#include "physproj/constraints.hpp"
#include "physproj/errors.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace physproj {

/// Settings for the nearest-point projection
///   minimize ||p - y||_W^2  subject to  g(x, p) = 0.
struct ProjectionSpec {
  /// Diagonal of W; empty means W = identity.
  Eigen::VectorXd weights;
  double tolerance = 1e-8;
  int max_iterations = 100;
  /// Initial regularization added to the constraint block when the
  /// Jacobian loses row rank.
  double damping = 1e-8;
  double backtrack_factor = 0.5;
  double sufficient_decrease = 1e-4;

  void validate(Eigen::Index output_dim) const;
};

enum class ProjectionStatus { Converged, MaxIterations, SingularSystem };

std::string to_string(ProjectionStatus status);

struct ProjectionResult {
  Eigen::VectorXd projected;
  Eigen::VectorXd multipliers;
  int iterations = 0;
  double stationarity = 0.0;  // ||2W(p - y) + J^T lambda||_inf
  double feasibility = 0.0;   // ||g(x, p)||_inf
  double kkt_norm = 0.0;      // max of the two
  ProjectionStatus status = ProjectionStatus::MaxIterations;
  double seconds = 0.0;

  bool converged() const { return status == ProjectionStatus::Converged; }
};

struct KktResidual {
  double stationarity = 0.0;
  double feasibility = 0.0;
};

KktResidual kkt_residual(const Eigen::VectorXd& p, const Eigen::VectorXd& multipliers,
                         const Eigen::VectorXd& y, const ConstraintSet& constraints,
                         const Eigen::VectorXd& input_x, const ProjectionSpec& spec);

/// Damped Newton iteration on the KKT system, started at p = y, lambda = 0,
/// globalized by a backtracking line search on an exact-penalty merit
/// function. Returns the first iterate whose stationarity and feasibility
/// norms are both within spec.tolerance.
ProjectionResult project(const Eigen::VectorXd& y, const ConstraintSet& constraints,
                         const Eigen::VectorXd& input_x, const ProjectionSpec& spec);

/// Independent projections of the rows of `ys` (inputs from the rows of
/// `inputs_x`; may have zero columns). Never throws on non-convergence; each
/// result carries its own status and wall-clock time.
std::vector<ProjectionResult> project_batch(const Eigen::MatrixXd& ys,
                                            const ConstraintSet& constraints,
                                            const Eigen::MatrixXd& inputs_x,
                                            const ProjectionSpec& spec);

using ConstraintFactory = std::function<std::unique_ptr<ConstraintSet>(Eigen::Index row)>;

std::vector<ProjectionResult> project_batch(const Eigen::MatrixXd& ys,
                                            const ConstraintFactory& factory,
                                            const Eigen::MatrixXd& inputs_x,
                                            const ProjectionSpec& spec);

} // namespace physproj
