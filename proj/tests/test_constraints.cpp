#include "fd.hpp"
#include "physproj/constraints.hpp"
#include "physproj/errors.hpp"
#include "physproj/springmass.hpp"

#include <doctest.h>

#include <random>

using namespace physproj;

namespace {

TransformSpec spring_transform() {
  return TransformSpec({{"x1", -0.6, 1.6, false}, {"v1", -3.2, 3.2, false}, {"x2", -0.1, 2.1, false},
                        {"v2", -3.2, 3.2, false}});
}

FunctionConstraint unit_circle() {
  return FunctionConstraint(
      1, 2, [](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z.squaredNorm() - 1.0); },
      [](const Eigen::VectorXd& z) { return Eigen::MatrixXd(2.0 * z.transpose()); });
}

} // namespace

TEST_CASE("energy residual is scaled by max(anchor, 1 J)") {
  const spring::SpringParams p;
  const TransformSpec tf = spring_transform();
  const spring::State s = spring::make_state(0.7, 1.0, 1.1, -0.5);
  const Eigen::VectorXd z = normalize(Eigen::VectorXd(s), tf);
  const double e = spring::energy(s, p);
  const Eigen::VectorXd none;
  CHECK(EnergyConstraint(p, 3.0, tf).residual(none, z)(0) == doctest::Approx((e - 3.0) / 3.0));
  CHECK(EnergyConstraint(p, 0.2, tf).residual(none, z)(0) == doctest::Approx(e - 0.2));
  CHECK(EnergyConstraint(p, 0.2, tf).scale() == 1.0);
}

TEST_CASE("energy constraint Jacobian and Hessian agree with finite differences at 100 points") {
  const spring::SpringParams p;
  const TransformSpec tf = spring_transform();
  const EnergyConstraint g(p, 3.5, tf);
  const Eigen::VectorXd none;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_j = 0.0, worst_h = 0.0;
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd z(4);
    for (int j = 0; j < 4; ++j) z(j) = u(rng);
    const Eigen::MatrixXd j_fd = fd::jacobian([&](const Eigen::VectorXd& v) { return g.residual(none, v); }, z);
    worst_j = std::max(worst_j, fd::relative_error(g.jacobian(none, z), j_fd));
    const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(1, u(rng));
    const Eigen::MatrixXd h_fd = fd::jacobian(
        [&](const Eigen::VectorXd& v) { return Eigen::VectorXd(g.jacobian(none, v).transpose() * lambda); }, z);
    worst_h = std::max(worst_h, fd::relative_error(g.weighted_hessian(none, z, lambda), h_fd));
  }
  CHECK(worst_j < 1e-6);
  CHECK(worst_h < 1e-6);
}

TEST_CASE("default weighted Hessian matches the analytic circle Hessian") {
  const FunctionConstraint c = unit_circle();
  Eigen::VectorXd z(2);
  z << 0.3, -1.2;
  const Eigen::MatrixXd h = c.weighted_hessian(Eigen::VectorXd(), z, Eigen::VectorXd::Constant(1, 0.7));
  CHECK((h - 1.4 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("constraint Jacobian layout is checked") {
  const FunctionConstraint bad(
      1, 2, [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); },
      [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(2, 2); });
  CHECK_THROWS_AS(constraint_jacobian(bad, Eigen::VectorXd(), Eigen::VectorXd::Zero(2)), ShapeError);
}
