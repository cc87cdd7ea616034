#include "physproj/constraints.hpp"

#include "physproj/errors.hpp"
#include "physproj/springmass.hpp"

#include <algorithm>
#include <cmath>

namespace physproj {

Eigen::MatrixXd ConstraintSet::weighted_hessian(const Eigen::VectorXd& input_x,
                                                const Eigen::VectorXd& z,
                                                const Eigen::VectorXd& multipliers) const {
  const Eigen::Index n = z.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd probe = z;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(z(j)));
    probe(j) = z(j) + step;
    const Eigen::VectorXd plus = jacobian(input_x, probe).transpose() * multipliers;
    probe(j) = z(j) - step;
    const Eigen::VectorXd minus = jacobian(input_x, probe).transpose() * multipliers;
    probe(j) = z(j);
    h.col(j) = (plus - minus) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Eigen::MatrixXd constraint_jacobian(const ConstraintSet& constraints, const Eigen::VectorXd& input_x,
                                    const Eigen::VectorXd& normalized_output) {
  require_shape(normalized_output.size() == constraints.output_dim(),
                "constraint_jacobian: output width mismatch");
  Eigen::MatrixXd j = constraints.jacobian(input_x, normalized_output);
  require_shape(j.rows() == constraints.residual_dim() && j.cols() == constraints.output_dim(),
                "constraint_jacobian: constraint returned a Jacobian of the wrong shape");
  return j;
}

FunctionConstraint::FunctionConstraint(Eigen::Index residual_dim, Eigen::Index output_dim,
                                       ResidualFn residual, JacobianFn jacobian)
    : residual_dim_(residual_dim),
      output_dim_(output_dim),
      residual_(std::move(residual)),
      jacobian_(std::move(jacobian)) {
  require(residual_dim > 0 && output_dim > 0, "constraint dimensions must be positive");
}

Eigen::VectorXd FunctionConstraint::residual(const Eigen::VectorXd&, const Eigen::VectorXd& z) const {
  return residual_(z);
}

Eigen::MatrixXd FunctionConstraint::jacobian(const Eigen::VectorXd&, const Eigen::VectorXd& z) const {
  return jacobian_(z);
}

EnergyConstraint::EnergyConstraint(const spring::SpringParams& params, double anchor_energy,
                                   TransformSpec transform)
    : params_(params),
      anchor_(anchor_energy),
      scale_(std::max(anchor_energy, 1.0)),
      transform_(std::move(transform)) {
  params_.validate();
  require(anchor_energy >= 0.0 && std::isfinite(anchor_energy), "energy anchor must be >= 0");
  require_shape(transform_.size() == 4, "energy constraint needs a 4-feature state transform");
}

Eigen::VectorXd EnergyConstraint::residual(const Eigen::VectorXd&, const Eigen::VectorXd& z) const {
  const spring::State s = denormalize(z, transform_);
  Eigen::VectorXd r(1);
  r(0) = (spring::energy(s, params_) - anchor_) / scale_;
  return r;
}

Eigen::MatrixXd EnergyConstraint::jacobian(const Eigen::VectorXd&, const Eigen::VectorXd& z) const {
  const spring::State s = denormalize(z, transform_);
  const Eigen::VectorXd chain = denormalize_derivative(z, transform_);
  return (spring::energy_gradient(s, params_).cwiseProduct(chain) / scale_).transpose();
}

Eigen::MatrixXd EnergyConstraint::weighted_hessian(const Eigen::VectorXd& input_x,
                                                   const Eigen::VectorXd& z,
                                                   const Eigen::VectorXd& multipliers) const {
  for (const auto& f : transform_.features())
    if (f.log10) return ConstraintSet::weighted_hessian(input_x, z, multipliers);
  const Eigen::VectorXd chain = denormalize_derivative(z, transform_);
  return multipliers(0) / scale_ * chain.asDiagonal() * spring::energy_hessian(params_) *
         chain.asDiagonal();
}

EnergyConstraint energy_constraint(const spring::SpringParams& params, double anchor_energy,
                                   const TransformSpec& transform) {
  return EnergyConstraint(params, anchor_energy, transform);
}

} // namespace physproj
