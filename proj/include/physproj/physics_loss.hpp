#pragma once

#include "physproj/ltp.hpp"
#include "physproj/spring_params.hpp"
#include "physproj/training.hpp"
#include "physproj/transform.hpp"

#include <array>

namespace physproj {

/// MSE between the energies of predicted next states and input states;
/// batches are normalized with `transform`, energies in J.
PhysicsEvaluation physics_loss_springmass(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                                          const TransformSpec& transform,
                                          const spring::SpringParams& params);

class SpringEnergyPhysics final : public PhysicsTerm {
public:
  SpringEnergyPhysics(spring::SpringParams params, TransformSpec transform);
  PhysicsEvaluation evaluate(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs) const override;

private:
  spring::SpringParams params_;
  TransformSpec transform_;
};

struct LtpPhysicsBreakdown {
  std::array<double, 3> law_mse{};  // MSE of the scaled residual of each law
  double weighted = 0.0;           // sum_j lambda_j * law_mse[j]
  Eigen::MatrixXd output_gradient;  // d weighted / d normalized outputs
};

/// Per-law MSE of scaled residuals for normalized LTP batches, combined with
/// the per-law weights.
LtpPhysicsBreakdown physics_loss_ltp(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                                     const TransformSpec& input_transform,
                                     const TransformSpec& output_transform,
                                     const std::array<double, 3>& lambdas,
                                     const ltp::LtpOptions& options = {});

/// PINN regularizer for the plasma case. Reports sum_j lambda_j L_j divided
/// by sum_j lambda_j, so that lambda_physics * L_physics = sum_j lambda_j L_j.
class LtpPhysics final : public PhysicsTerm {
public:
  LtpPhysics(TransformSpec input_transform, TransformSpec output_transform,
             std::array<double, 3> lambdas, ltp::LtpOptions options = {});
  PhysicsEvaluation evaluate(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs) const override;

private:
  TransformSpec input_transform_;
  TransformSpec output_transform_;
  std::array<double, 3> lambdas_;
  ltp::LtpOptions options_;
};

} // namespace physproj
