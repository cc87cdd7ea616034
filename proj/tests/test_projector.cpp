#include "physproj/constraints.hpp"
#include "physproj/errors.hpp"
#include "physproj/projector.hpp"

#include <doctest.h>

#include <random>

using namespace physproj;

namespace {

FunctionConstraint unit_circle() {
  return FunctionConstraint(
      1, 2, [](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z.squaredNorm() - 1.0); },
      [](const Eigen::VectorXd& z) { return Eigen::MatrixXd(2.0 * z.transpose()); });
}

/// a . z = b
FunctionConstraint hyperplane(const Eigen::VectorXd& a, double b) {
  return FunctionConstraint(
      1, a.size(), [a, b](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, a.dot(z) - b); },
      [a](const Eigen::VectorXd&) { return Eigen::MatrixXd(a.transpose()); });
}

} // namespace

TEST_CASE("projection onto the unit circle is radial") {
  const FunctionConstraint c = unit_circle();
  ProjectionSpec spec;
  spec.tolerance = 1e-10;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586), radius(0.2, 3.0);
  for (int k = 0; k < 200; ++k) {
    const double t = angle(rng), r = radius(rng);
    const Eigen::Vector2d y(r * std::cos(t), r * std::sin(t));
    const ProjectionResult res = project(y, c, Eigen::VectorXd(), spec);
    REQUIRE(res.converged());
    CHECK((res.projected - y / r).norm() < 1e-9);
    CHECK(res.kkt_norm <= spec.tolerance);
  }
}

TEST_CASE("weighted projection onto a hyperplane has the closed form") {
  Eigen::VectorXd a(3), w(3), y(3);
  a << 1.0, -2.0, 0.5;
  w << 1.0, 4.0, 0.25;
  y << 0.3, 0.7, -1.1;
  const double b = 0.4;
  ProjectionSpec spec;
  spec.weights = w;
  spec.tolerance = 1e-12;
  const ProjectionResult res = project(y, hyperplane(a, b), Eigen::VectorXd(), spec);
  const Eigen::VectorXd w_inv_a = a.cwiseQuotient(w);
  const Eigen::VectorXd expected = y - w_inv_a * (a.dot(y) - b) / a.dot(w_inv_a);
  REQUIRE(res.converged());
  CHECK((res.projected - expected).norm() < 1e-12);
  CHECK(res.iterations <= 2);
  // lambda = 2 (a.y - b) / (a^T W^-1 a)
  CHECK(res.multipliers(0) == doctest::Approx(2.0 * (a.dot(y) - b) / a.dot(w_inv_a)));
}

TEST_CASE("feasible input returns unchanged after zero iterations") {
  const FunctionConstraint c = unit_circle();
  const Eigen::Vector2d y(0.6, 0.8);
  const ProjectionResult res = project(y, c, Eigen::VectorXd(), {});
  CHECK(res.converged());
  CHECK(res.iterations == 0);
  CHECK(res.projected == Eigen::VectorXd(y));
}

TEST_CASE("projection is idempotent") {
  const FunctionConstraint c = unit_circle();
  ProjectionSpec spec;
  spec.tolerance = 1e-8;
  const Eigen::Vector2d y(2.5, -0.4);
  const ProjectionResult once = project(y, c, Eigen::VectorXd(), spec);
  const ProjectionResult twice = project(once.projected, c, Eigen::VectorXd(), spec);
  CHECK(twice.iterations == 0);
  CHECK((twice.projected - once.projected).lpNorm<Eigen::Infinity>() <= 2.0 * spec.tolerance);
}

TEST_CASE("infeasible constraint reports non-convergence without throwing") {
  const FunctionConstraint impossible(
      1, 2, [](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z.squaredNorm() + 1.0); },
      [](const Eigen::VectorXd& z) { return Eigen::MatrixXd(2.0 * z.transpose()); });
  ProjectionSpec spec;
  spec.max_iterations = 30;
  const auto results = project_batch(Eigen::MatrixXd::Ones(3, 2), impossible, Eigen::MatrixXd(3, 0), spec);
  for (const auto& r : results) {
    CHECK_FALSE(r.converged());
    CHECK(r.feasibility >= 1.0);
  }
}

TEST_CASE("batch projection with a per-row factory") {
  ProjectionSpec spec;
  spec.tolerance = 1e-12;
  Eigen::MatrixXd ys(3, 2);
  ys << 1.0, 1.0,
        2.0, 0.0,
        0.0, -3.0;
  const ConstraintFactory radius_i = [](Eigen::Index row) -> std::unique_ptr<ConstraintSet> {
    const double r2 = static_cast<double>((row + 1) * (row + 1));
    return std::make_unique<FunctionConstraint>(
        1, 2, [r2](const Eigen::VectorXd& z) { return Eigen::VectorXd::Constant(1, z.squaredNorm() - r2); },
        [](const Eigen::VectorXd& z) { return Eigen::MatrixXd(2.0 * z.transpose()); });
  };
  const auto results = project_batch(ys, radius_i, Eigen::MatrixXd(3, 0), spec);
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(results[static_cast<std::size_t>(i)].projected.norm() == doctest::Approx(static_cast<double>(i + 1)));
}

TEST_CASE("KKT residual definition") {
  const FunctionConstraint c = unit_circle();
  Eigen::VectorXd p(2), y(2), lambda(1);
  p << 1.0, 0.0;
  y << 2.0, 0.0;
  lambda << 1.0;
  // 2 (p - y) + J^T lambda = (-2 + 2, 0)
  const KktResidual k = kkt_residual(p, lambda, y, c, Eigen::VectorXd(), {});
  CHECK(k.stationarity == doctest::Approx(0.0));
  CHECK(k.feasibility == doctest::Approx(0.0));
}

TEST_CASE("projection spec validation") {
  ProjectionSpec spec;
  spec.tolerance = 0.0;
  CHECK_THROWS_AS(spec.validate(2), ValidationError);
  spec = ProjectionSpec{};
  spec.weights = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(spec.validate(2), ShapeError);
  spec.weights = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(spec.validate(2), ValidationError);
  CHECK_THROWS_AS(project(Eigen::Vector2d(NAN, 0.0), unit_circle(), Eigen::VectorXd(), {}), NumericalError);
}
