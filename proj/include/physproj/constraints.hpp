#pragma once

#include "physproj/spring_params.hpp"
#include "physproj/transform.hpp"

#include <Eigen/Dense>

#include <functional>

namespace physproj {

/// Vector constraint g(x, z) = 0 on a normalized model output z, given the
/// physical model input x. Residuals are dimensionless (scaled).
class ConstraintSet {
public:
  virtual ~ConstraintSet() = default;

  virtual Eigen::Index residual_dim() const = 0;
  virtual Eigen::Index output_dim() const = 0;

  virtual Eigen::VectorXd residual(const Eigen::VectorXd& input_x,
                                   const Eigen::VectorXd& normalized_output) const = 0;
  /// d residual / d normalized_output, residual_dim x output_dim.
  virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& input_x,
                                   const Eigen::VectorXd& normalized_output) const = 0;
  /// Hessian of multipliers . g with respect to the normalized output. The
  /// default differentiates the analytic Jacobian by central differences.
  virtual Eigen::MatrixXd weighted_hessian(const Eigen::VectorXd& input_x,
                                           const Eigen::VectorXd& normalized_output,
                                           const Eigen::VectorXd& multipliers) const;
};

/// Jacobian with layout checks.
Eigen::MatrixXd constraint_jacobian(const ConstraintSet& constraints, const Eigen::VectorXd& input_x,
                                    const Eigen::VectorXd& normalized_output);

/// Constraint defined by callables; used for analytic toy problems.
class FunctionConstraint final : public ConstraintSet {
public:
  using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  FunctionConstraint(Eigen::Index residual_dim, Eigen::Index output_dim, ResidualFn residual,
                     JacobianFn jacobian);

  Eigen::Index residual_dim() const override { return residual_dim_; }
  Eigen::Index output_dim() const override { return output_dim_; }
  Eigen::VectorXd residual(const Eigen::VectorXd&, const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&, const Eigen::VectorXd& z) const override;

private:
  Eigen::Index residual_dim_;
  Eigen::Index output_dim_;
  ResidualFn residual_;
  JacobianFn jacobian_;
};

/// Energy conservation for the spring-mass state:
/// g(z) = (E(denormalize(z)) - anchor) / max(anchor, 1 J).
class EnergyConstraint final : public ConstraintSet {
public:
  EnergyConstraint(const spring::SpringParams& params, double anchor_energy, TransformSpec transform);

  Eigen::Index residual_dim() const override { return 1; }
  Eigen::Index output_dim() const override { return 4; }
  Eigen::VectorXd residual(const Eigen::VectorXd& input_x, const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& input_x, const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd weighted_hessian(const Eigen::VectorXd& input_x, const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& multipliers) const override;

  double anchor() const { return anchor_; }
  double scale() const { return scale_; }

private:
  spring::SpringParams params_;
  double anchor_;
  double scale_;
  TransformSpec transform_;
};

EnergyConstraint energy_constraint(const spring::SpringParams& params, double anchor_energy,
                                   const TransformSpec& transform);

} // namespace physproj
