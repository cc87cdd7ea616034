#include "physproj/projector.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace physproj {

std::string to_string(ProjectionStatus status) {
  switch (status) {
    case ProjectionStatus::Converged: return "converged";
    case ProjectionStatus::MaxIterations: return "max_iterations";
    case ProjectionStatus::SingularSystem: return "singular_system";
  }
  return "unknown";
}

void ProjectionSpec::validate(Eigen::Index output_dim) const {
  require(tolerance > 0.0, "projection tolerance must be positive");
  require(max_iterations > 0, "projection max_iterations must be positive");
  require(damping >= 0.0, "projection damping must be non-negative");
  require(backtrack_factor > 0.0 && backtrack_factor < 1.0, "backtrack factor must lie in (0, 1)");
  require(sufficient_decrease > 0.0 && sufficient_decrease < 1.0,
          "sufficient decrease must lie in (0, 1)");
  if (weights.size() != 0) {
    require_shape(weights.size() == output_dim, "projection weights: width mismatch");
    require(weights.allFinite() && (weights.array() > 0.0).all(),
            "projection weights must be strictly positive");
  }
}

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

Eigen::VectorXd weight_vector(const ProjectionSpec& spec, Eigen::Index n) {
  return spec.weights.size() ? spec.weights : Eigen::VectorXd::Ones(n);
}

class Timer {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace

KktResidual kkt_residual(const Eigen::VectorXd& p, const Eigen::VectorXd& multipliers,
                         const Eigen::VectorXd& y, const ConstraintSet& constraints,
                         const Eigen::VectorXd& input_x, const ProjectionSpec& spec) {
  require_shape(p.size() == constraints.output_dim() && y.size() == p.size(),
                "kkt_residual: output width mismatch");
  require_shape(multipliers.size() == constraints.residual_dim(),
                "kkt_residual: multiplier count mismatch");
  const Eigen::VectorXd w = weight_vector(spec, p.size());
  const Eigen::MatrixXd jac = constraint_jacobian(constraints, input_x, p);
  const Eigen::VectorXd stationarity =
      2.0 * w.cwiseProduct(p - y) + jac.transpose() * multipliers;
  return {inf_norm(stationarity), inf_norm(constraints.residual(input_x, p))};
}

ProjectionResult project(const Eigen::VectorXd& y, const ConstraintSet& constraints,
                         const Eigen::VectorXd& input_x, const ProjectionSpec& spec) {
  const Timer timer;
  const Eigen::Index n = constraints.output_dim();
  const Eigen::Index m = constraints.residual_dim();
  spec.validate(n);
  require_shape(y.size() == n, "project: output width mismatch");
  if (!y.allFinite()) throw NumericalError("project: non-finite model output");
  const Eigen::VectorXd w = weight_vector(spec, n);
  const double tol = spec.tolerance;

  ProjectionResult result;
  result.projected = y;
  result.multipliers = Eigen::VectorXd::Zero(m);

  Eigen::VectorXd g = constraints.residual(input_x, y);
  require_shape(g.size() == m, "project: constraint returned a residual of the wrong size");
  if (!g.allFinite()) throw NumericalError("project: non-finite constraint residual at model output");
  result.feasibility = inf_norm(g);
  result.kkt_norm = result.feasibility;
  if (result.feasibility <= tol) {
    result.status = ProjectionStatus::Converged;
    result.seconds = timer.seconds();
    return result;
  }

  auto objective = [&](const Eigen::VectorXd& p) { return (p - y).dot(w.cwiseProduct(p - y)); };
  auto objective_gradient = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return 2.0 * w.cwiseProduct(p - y);
  };

  Eigen::VectorXd p = y;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd jac = constraint_jacobian(constraints, input_x, p);
  double stationarity = 0.0;
  double feasibility = result.feasibility;
  double penalty = 1.0;
  int stalled = 0;
  double shift = 0.0;
  ProjectionStatus failure = ProjectionStatus::MaxIterations;

  // Best iterate so far, returned when the iteration does not converge.
  double best_kkt = result.kkt_norm;

  for (int iteration = 1; iteration <= spec.max_iterations; ++iteration) {
    result.iterations = iteration;
    const double kkt_now = std::max(stationarity, feasibility);

    // Lagrangian Hessian 2W + sum_i lambda_i Hess g_i.
    Eigen::MatrixXd hessian = (2.0 * w).asDiagonal();
    if (lambda.squaredNorm() > 0.0) hessian += constraints.weighted_hessian(input_x, p, lambda);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();

    // Convexify on the tangent space of the linearized constraints.
    if (rank < n) {
      const Eigen::MatrixXd q = qr.householderQ();
      const Eigen::MatrixXd tangent = q.rightCols(n - rank);
      const Eigen::MatrixXd reduced = tangent.transpose() * hessian * tangent;
      const double min_eig =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(reduced, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .minCoeff();
      // A nearly flat tangent direction would give an unbounded step.
      const double floor = 0.2 * w.minCoeff();
      if (min_eig < floor) hessian.diagonal().array() += floor - min_eig;
    }

    const double delta =
        rank < m ? std::max(spec.damping * std::min(1.0, kkt_now), 1e-14) : 0.0;
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -objective_gradient(p);
    rhs.tail(m) = -g;

    Eigen::VectorXd step, lambda_newton, p_trial, g_trial;
    double merit0 = 0.0, slope = 0.0;
    // Solves the KKT system with `sigma` added to the Hessian diagonal.
    auto solve_step = [&](double sigma) {
      Eigen::MatrixXd kkt(n + m, n + m);
      kkt.topLeftCorner(n, n) = hessian;
      kkt.topLeftCorner(n, n).diagonal().array() += sigma;
      kkt.topRightCorner(n, m) = jac.transpose();
      kkt.bottomLeftCorner(m, n) = jac;
      kkt.bottomRightCorner(m, m) = -delta * Eigen::MatrixXd::Identity(m, m);
      const Eigen::VectorXd solution = kkt.fullPivLu().solve(rhs);
      if (!solution.allFinite()) return false;
      step = solution.head(n);
      lambda_newton = solution.tail(m);
      // Exact l1 penalty merit; the penalty must dominate the multipliers.
      // Shifted solves inflate the multipliers and are not counted.
      if (sigma == 0.0) penalty = std::max(penalty, 1.1 * inf_norm(lambda_newton) + 1e-12);
      if (stalled >= 3) {
        penalty *= 10.0;
        stalled = 0;
      }
      merit0 = objective(p) + penalty * g.lpNorm<1>();
      slope = objective_gradient(p).dot(step) - penalty * g.lpNorm<1>();
      return true;
    };
    // Trial points far from the data can leave the constraint's domain; they
    // count as rejected steps.
    auto trial_residual = [&](const Eigen::VectorXd& pt) -> Eigen::VectorXd {
      try {
        return constraints.residual(input_x, pt);
      } catch (const NumericalError&) {
        return Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN());
      }
    };
    auto sufficient = [&](const Eigen::VectorXd& pt, const Eigen::VectorXd& gt, double a) {
      if (!pt.allFinite() || !gt.allFinite()) return false;
      const double merit = objective(pt) + penalty * gt.lpNorm<1>();
      return slope < 0.0 ? merit <= merit0 + spec.sufficient_decrease * a * slope : merit < merit0;
    };
    auto try_full_step = [&] {
      p_trial = p + step;
      g_trial = trial_residual(p_trial);
      if (!p_trial.allFinite() || !g_trial.allFinite()) return false;
      if (sufficient(p_trial, g_trial, 1.0)) return true;
      // Full steps that shrink the KKT error are kept even when the merit
      // function rejects them (avoids the Maratos effect).
      const Eigen::MatrixXd jac_trial = constraint_jacobian(constraints, input_x, p_trial);
      const double trial_kkt = std::max(
          inf_norm(objective_gradient(p_trial) + jac_trial.transpose() * lambda_newton),
          inf_norm(g_trial));
      if (trial_kkt <= 0.9 * kkt_now) return true;
      if (rank < m) return false;
      // Second-order correction: minimum-norm pull back onto the linearized
      // constraints, then retry the full step.
      const Eigen::MatrixXd jw = jac * w.cwiseInverse().asDiagonal();
      const Eigen::VectorXd mu = (jw * jac.transpose()).ldlt().solve(g_trial);
      const Eigen::VectorXd p_soc = p_trial - jw.transpose() * mu;
      const Eigen::VectorXd g_soc = trial_residual(p_soc);
      if (!sufficient(p_soc, g_soc, 1.0)) return false;
      p_trial = p_soc;
      g_trial = g_soc;
      return true;
    };

    // Rejected full steps raise the Hessian shift, which bends the step
    // towards the minimum-norm restoration direction. Backtracking along the
    // unraised step is the fallback.
    const double shift0 = shift;
    bool accepted = false;
    bool solved = false;
    for (int attempt = 0; attempt < 4 && !accepted; ++attempt) {
      solved = solve_step(shift);
      if (!solved) break;
      accepted = try_full_step();
      // At p = y only the restoration part remains, which no shift changes.
      if (accepted || p == y) break;
      shift = std::min(std::max(4.0 * shift, w.maxCoeff()), 1e6 * w.maxCoeff());
    }
    if (!solved) {
      failure = ProjectionStatus::SingularSystem;
      break;
    }
    double alpha = 1.0;
    if (!accepted) {
      shift = shift0;
      if (!solve_step(shift)) {
        failure = ProjectionStatus::SingularSystem;
        break;
      }
      for (alpha = spec.backtrack_factor; alpha >= 1e-12; alpha *= spec.backtrack_factor) {
        p_trial = p + alpha * step;
        g_trial = trial_residual(p_trial);
        if (sufficient(p_trial, g_trial, alpha)) {
          accepted = true;
          break;
        }
      }
    }
    if (accepted) shift = shift > w.minCoeff() ? 0.1 * shift : 0.0;
    if (!accepted) {
      if (rank < m) {
        failure = ProjectionStatus::SingularSystem;
        break;
      }
      penalty *= 10.0;
      ++stalled;
      continue;
    }

    const double previous_feasibility = feasibility;
    lambda += alpha * (lambda_newton - lambda);
    p = p_trial;
    g = g_trial;
    jac = constraint_jacobian(constraints, input_x, p);

    const Eigen::VectorXd grad = objective_gradient(p);
    stationarity = inf_norm(grad + jac.transpose() * lambda);
    // Least-squares multipliers at the new point, kept when they fit better.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_new(jac.transpose());
    if (qr_new.rank() == m) {
      const Eigen::VectorXd lambda_ls = qr_new.solve(-grad);
      const double stationarity_ls = inf_norm(grad + jac.transpose() * lambda_ls);
      if (lambda_ls.allFinite() && stationarity_ls < stationarity) {
        lambda = lambda_ls;
        stationarity = stationarity_ls;
      }
    }
    feasibility = inf_norm(g);
    stalled = feasibility < 0.9 * previous_feasibility || feasibility <= stationarity ? 0 : stalled + 1;

    const double kkt_norm = std::max(stationarity, feasibility);
    if (kkt_norm < best_kkt) {
      best_kkt = kkt_norm;
      result.projected = p;
      result.multipliers = lambda;
      result.stationarity = stationarity;
      result.feasibility = feasibility;
      result.kkt_norm = kkt_norm;
    }
    if (stationarity <= tol && feasibility <= tol) {
      result.projected = p;
      result.multipliers = lambda;
      result.stationarity = stationarity;
      result.feasibility = feasibility;
      result.kkt_norm = kkt_norm;
      result.status = ProjectionStatus::Converged;
      result.seconds = timer.seconds();
      return result;
    }
  }
  result.status = failure;
  result.seconds = timer.seconds();
  return result;
}

namespace {

ProjectionResult project_guarded(const Eigen::VectorXd& y, const ConstraintSet& constraints,
                                 const Eigen::VectorXd& x, const ProjectionSpec& spec) {
  try {
    return project(y, constraints, x, spec);
  } catch (const NumericalError&) {
    ProjectionResult failed;
    failed.projected = y;
    failed.multipliers = Eigen::VectorXd::Zero(constraints.residual_dim());
    failed.feasibility = std::numeric_limits<double>::infinity();
    failed.kkt_norm = failed.feasibility;
    failed.status = ProjectionStatus::SingularSystem;
    return failed;
  }
}

Eigen::VectorXd input_row(const Eigen::MatrixXd& inputs_x, Eigen::Index i) {
  if (inputs_x.cols() == 0) return Eigen::VectorXd();
  return inputs_x.row(i).transpose();
}

} // namespace

std::vector<ProjectionResult> project_batch(const Eigen::MatrixXd& ys, const ConstraintSet& constraints,
                                            const Eigen::MatrixXd& inputs_x,
                                            const ProjectionSpec& spec) {
  require_shape(inputs_x.cols() == 0 || inputs_x.rows() == ys.rows(),
                "project_batch: outputs and inputs have different lengths");
  std::vector<ProjectionResult> results;
  results.reserve(static_cast<std::size_t>(ys.rows()));
  for (Eigen::Index i = 0; i < ys.rows(); ++i)
    results.push_back(project_guarded(ys.row(i).transpose(), constraints, input_row(inputs_x, i), spec));
  return results;
}

std::vector<ProjectionResult> project_batch(const Eigen::MatrixXd& ys, const ConstraintFactory& factory,
                                            const Eigen::MatrixXd& inputs_x,
                                            const ProjectionSpec& spec) {
  require_shape(inputs_x.cols() == 0 || inputs_x.rows() == ys.rows(),
                "project_batch: outputs and inputs have different lengths");
  std::vector<ProjectionResult> results;
  results.reserve(static_cast<std::size_t>(ys.rows()));
  for (Eigen::Index i = 0; i < ys.rows(); ++i) {
    const std::unique_ptr<ConstraintSet> constraints = factory(i);
    results.push_back(project_guarded(ys.row(i).transpose(), *constraints, input_row(inputs_x, i), spec));
  }
  return results;
}

} // namespace physproj
