#include "physproj/physics_loss.hpp"

#include "physproj/errors.hpp"
#include "physproj/springmass.hpp"

namespace physproj {

PhysicsEvaluation physics_loss_springmass(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                                          const TransformSpec& transform,
                                          const spring::SpringParams& params) {
  require_shape(inputs.rows() == outputs.rows() && inputs.cols() == 4 && outputs.cols() == 4,
                "spring physics loss: batches must be n x 4");
  const Eigen::Index n = inputs.rows();
  require_shape(n > 0, "spring physics loss: empty batch");
  PhysicsEvaluation eval;
  eval.output_gradient.resize(n, 4);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd z_out = outputs.row(i).transpose();
    const spring::State s_in = denormalize(Eigen::VectorXd(inputs.row(i).transpose()), transform);
    const spring::State s_out = denormalize(z_out, transform);
    const double diff = spring::energy(s_out, params) - spring::energy(s_in, params);
    sum += diff * diff;
    eval.output_gradient.row(i) =
        (2.0 * diff / static_cast<double>(n)) *
        spring::energy_gradient(s_out, params).cwiseProduct(denormalize_derivative(z_out, transform)).transpose();
  }
  eval.loss = sum / static_cast<double>(n);
  return eval;
}

SpringEnergyPhysics::SpringEnergyPhysics(spring::SpringParams params, TransformSpec transform)
    : params_(params), transform_(std::move(transform)) {
  params_.validate();
  require_shape(transform_.size() == 4, "spring physics: transform must have 4 features");
}

PhysicsEvaluation SpringEnergyPhysics::evaluate(const Eigen::MatrixXd& inputs,
                                                const Eigen::MatrixXd& outputs) const {
  return physics_loss_springmass(inputs, outputs, transform_, params_);
}

LtpPhysicsBreakdown physics_loss_ltp(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                                     const TransformSpec& input_transform,
                                     const TransformSpec& output_transform,
                                     const std::array<double, 3>& lambdas,
                                     const ltp::LtpOptions& options) {
  require_shape(inputs.rows() == outputs.rows() && inputs.cols() == ltp::kInputCount &&
                    outputs.cols() == ltp::kOutputCount,
                "ltp physics loss: batches must be n x 3 and n x 17");
  const Eigen::Index n = inputs.rows();
  require_shape(n > 0, "ltp physics loss: empty batch");
  const auto& schema = ltp::standard_schema();
  LtpPhysicsBreakdown out;
  out.output_gradient = Eigen::MatrixXd::Zero(n, ltp::kOutputCount);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = denormalize(Eigen::VectorXd(inputs.row(i).transpose()), input_transform);
    const Eigen::VectorXd z = outputs.row(i).transpose();
    const Eigen::VectorXd y = denormalize(z, output_transform);
    const Eigen::Vector3d r = ltp::scaled_residuals(x, y, schema, options);
    for (std::size_t j = 0; j < 3; ++j) out.law_mse[j] += r(static_cast<Eigen::Index>(j)) * r(static_cast<Eigen::Index>(j));
    if (lambdas[0] == 0.0 && lambdas[1] == 0.0 && lambdas[2] == 0.0) continue;
    const Eigen::MatrixXd jac = ltp::scaled_residual_jacobian(x, y, schema, options) *
                                denormalize_derivative(z, output_transform).asDiagonal();
    Eigen::Vector3d coeff;
    for (Eigen::Index j = 0; j < 3; ++j)
      coeff(j) = lambdas[static_cast<std::size_t>(j)] * 2.0 * r(j) / static_cast<double>(n);
    out.output_gradient.row(i) = coeff.transpose() * jac;
  }
  for (std::size_t j = 0; j < 3; ++j) {
    out.law_mse[j] /= static_cast<double>(n);
    out.weighted += lambdas[j] * out.law_mse[j];
  }
  return out;
}

LtpPhysics::LtpPhysics(TransformSpec input_transform, TransformSpec output_transform,
                       std::array<double, 3> lambdas, ltp::LtpOptions options)
    : input_transform_(std::move(input_transform)),
      output_transform_(std::move(output_transform)),
      lambdas_(lambdas),
      options_(options) {
  require(lambdas[0] >= 0.0 && lambdas[1] >= 0.0 && lambdas[2] >= 0.0,
          "per-law lambdas must be non-negative");
}

PhysicsEvaluation LtpPhysics::evaluate(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs) const {
  const double total = lambdas_[0] + lambdas_[1] + lambdas_[2];
  LtpPhysicsBreakdown b =
      physics_loss_ltp(inputs, outputs, input_transform_, output_transform_, lambdas_, options_);
  PhysicsEvaluation eval;
  if (total > 0.0) {
    eval.loss = b.weighted / total;
    eval.output_gradient = b.output_gradient / total;
  } else {
    eval.output_gradient = Eigen::MatrixXd::Zero(outputs.rows(), outputs.cols());
  }
  return eval;
}

} // namespace physproj
