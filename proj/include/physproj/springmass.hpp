#pragma once

#include "physproj/projector.hpp"
#include "physproj/spring_params.hpp"
#include "physproj/transform.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace physproj::spring {

/// State layout (x1, v1, x2, v2), physical units.
template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, 4, 1>;
using State = StateVector<double>;

enum StateIndex : Eigen::Index { kX1 = 0, kV1 = 1, kX2 = 2, kV2 = 3 };

inline const std::vector<std::string>& state_names() {
  static const std::vector<std::string> names{"x1", "v1", "x2", "v2"};
  return names;
}

inline State make_state(double x1, double v1, double x2, double v2) {
  return State(x1, v1, x2, v2);
}

/// Initial condition of the single-trajectory study.
inline State reference_initial_state() { return make_state(-0.16, -2.18, 0.09, -0.16); }

inline State equilibrium_state(const SpringParams& p) { return make_state(p.L1, 0.0, p.L1 + p.L2, 0.0); }

/// Time derivative (dx1, dv1, dx2, dv2).
template <typename Derived>
StateVector<typename Derived::Scalar> rhs(const Eigen::MatrixBase<Derived>& s, const SpringParams& p) {
  using Scalar = typename Derived::Scalar;
  const Scalar stretch1 = s(kX1) - p.L1;
  const Scalar stretch2 = s(kX2) - s(kX1) - p.L2;
  StateVector<Scalar> d;
  d(kX1) = s(kV1);
  d(kV1) = (-p.k1 * stretch1 + p.k2 * stretch2) / p.m1;
  d(kX2) = s(kV2);
  d(kV2) = -p.k2 * stretch2 / p.m2;
  return d;
}

/// Mechanical energy, J.
template <typename Derived>
typename Derived::Scalar energy(const Eigen::MatrixBase<Derived>& s, const SpringParams& p) {
  using Scalar = typename Derived::Scalar;
  const Scalar stretch1 = s(kX1) - p.L1;
  const Scalar stretch2 = s(kX2) - s(kX1) - p.L2;
  return Scalar(0.5) * (p.m1 * s(kV1) * s(kV1) + p.m2 * s(kV2) * s(kV2) +
                        p.k1 * stretch1 * stretch1 + p.k2 * stretch2 * stretch2);
}

/// dE/d(state).
template <typename Derived>
StateVector<typename Derived::Scalar> energy_gradient(const Eigen::MatrixBase<Derived>& s,
                                                      const SpringParams& p) {
  using Scalar = typename Derived::Scalar;
  const Scalar stretch1 = s(kX1) - p.L1;
  const Scalar stretch2 = s(kX2) - s(kX1) - p.L2;
  StateVector<Scalar> g;
  g(kX1) = p.k1 * stretch1 - p.k2 * stretch2;
  g(kV1) = p.m1 * s(kV1);
  g(kX2) = p.k2 * stretch2;
  g(kV2) = p.m2 * s(kV2);
  return g;
}

/// d²E/d(state)², constant.
Eigen::Matrix4d energy_hessian(const SpringParams& p);

State rk4_step(const State& s, const SpringParams& p, double dt);
/// n_substeps RK4 steps of size horizon / n_substeps.
State integrate(const State& s, const SpringParams& p, double horizon, int n_substeps);

/// Uniform draw from the bounding box of {E < e_max}, rejected until
/// energy < e_max.
State sample_state(const SpringParams& p, double e_max, std::mt19937_64& rng);

struct TransitionSample {
  State input;
  State target;
};

std::vector<TransitionSample> generate_dataset(const SpringParams& p, double e_max, int n,
                                               double delta_t, int n_substeps, std::uint64_t seed);

/// Inputs and targets as n x 4 matrices, physical units.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> to_matrices(const std::vector<TransitionSample>& samples);

void write_dataset_csv(const std::filesystem::path& path, const std::vector<TransitionSample>& samples);
std::vector<TransitionSample> read_dataset_csv(const std::filesystem::path& path);

/// Maps a normalized state to the normalized next state.
using StepModel = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

enum class EnergyAnchor { Initial, Previous };

struct RolloutProjection {
  ProjectionSpec spec;
  EnergyAnchor anchor = EnergyAnchor::Initial;
};

struct Trajectory {
  std::vector<State> states;      // states[0] is the initial condition
  std::vector<double> energies;   // J
  std::vector<ProjectionResult> projections;  // one per step when projecting
};

class RolloutError : public NumericalError {
public:
  RolloutError(int step, ProjectionStatus status);
  int step() const { return step_; }
  ProjectionStatus status() const { return status_; }

private:
  int step_;
  ProjectionStatus status_;
};

/// Autoregressive rollout through `model`. With a projector every predicted
/// state is projected (in normalized space) onto the energy shell before
/// being fed back.
Trajectory rollout(const StepModel& model, const State& initial, int n_steps,
                   const TransformSpec& transform, const SpringParams& params,
                   const RolloutProjection* projector = nullptr);

/// Reference trajectory from the integrator.
Trajectory ground_truth(const State& initial, int n_steps, double delta_t, int n_substeps,
                        const SpringParams& params);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                          double delta_t);

} // namespace physproj::spring
