#include "physproj/springmass.hpp"

#include "physproj/csv.hpp"

#include <cmath>

namespace physproj::spring {

void SpringParams::validate() const {
  require(m1 > 0 && m2 > 0 && k1 > 0 && k2 > 0 && L1 > 0 && L2 > 0,
          "spring parameters must be strictly positive");
}

Eigen::Matrix4d energy_hessian(const SpringParams& p) {
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h(kX1, kX1) = p.k1 + p.k2;
  h(kX1, kX2) = -p.k2;
  h(kX2, kX1) = -p.k2;
  h(kX2, kX2) = p.k2;
  h(kV1, kV1) = p.m1;
  h(kV2, kV2) = p.m2;
  return h;
}

State rk4_step(const State& s, const SpringParams& p, double dt) {
  require(dt > 0.0, "rk4_step: dt must be positive");
  const State k1 = rhs(s, p);
  const State k2 = rhs(s + 0.5 * dt * k1, p);
  const State k3 = rhs(s + 0.5 * dt * k2, p);
  const State k4 = rhs(s + dt * k3, p);
  return s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

State integrate(const State& s, const SpringParams& p, double horizon, int n_substeps) {
  require(horizon > 0.0, "integrate: horizon must be positive");
  require(n_substeps >= 1, "integrate: need at least one substep");
  const double dt = horizon / n_substeps;
  State out = s;
  for (int i = 0; i < n_substeps; ++i) out = rk4_step(out, p, dt);
  return out;
}

State sample_state(const SpringParams& p, double e_max, std::mt19937_64& rng) {
  require(e_max > 0.0, "sample_state: e_max must be positive");
  const double a1 = std::sqrt(2.0 * e_max / p.k1);
  const double a2 = std::sqrt(2.0 * e_max / p.k2);
  const double b1 = std::sqrt(2.0 * e_max / p.m1);
  const double b2 = std::sqrt(2.0 * e_max / p.m2);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (;;) {
    const double x1 = p.L1 + a1 * unit(rng);
    const double gap = p.L2 + a2 * unit(rng);
    const double v1 = b1 * unit(rng);
    const double v2 = b2 * unit(rng);
    const State s = make_state(x1, v1, x1 + gap, v2);
    if (energy(s, p) < e_max) return s;
  }
}

std::vector<TransitionSample> generate_dataset(const SpringParams& p, double e_max, int n,
                                               double delta_t, int n_substeps, std::uint64_t seed) {
  p.validate();
  require(n >= 1, "generate_dataset: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<TransitionSample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const State s = sample_state(p, e_max, rng);
    samples.push_back({s, integrate(s, p, delta_t, n_substeps)});
  }
  return samples;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> to_matrices(const std::vector<TransitionSample>& samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd in(n, 4), out(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    in.row(i) = samples[static_cast<std::size_t>(i)].input.transpose();
    out.row(i) = samples[static_cast<std::size_t>(i)].target.transpose();
  }
  return {in, out};
}

void write_dataset_csv(const std::filesystem::path& path, const std::vector<TransitionSample>& samples) {
  auto [in, out] = to_matrices(samples);
  Eigen::MatrixXd both(in.rows(), 8);
  both << in, out;
  csv::write_matrix(path, {"x1", "v1", "x2", "v2", "x1_next", "v1_next", "x2_next", "v2_next"}, both,
                    true);
}

std::vector<TransitionSample> read_dataset_csv(const std::filesystem::path& path) {
  const csv::NumericTable table = csv::read_numeric(path);
  const std::vector<std::string> cols{"x1", "v1", "x2", "v2", "x1_next", "v1_next", "x2_next", "v2_next"};
  std::vector<Eigen::Index> idx;
  for (const auto& c : cols) idx.push_back(table.column(c));
  std::vector<TransitionSample> samples;
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    TransitionSample s;
    for (int k = 0; k < 4; ++k) {
      s.input(k) = table.values(r, idx[static_cast<std::size_t>(k)]);
      s.target(k) = table.values(r, idx[static_cast<std::size_t>(k + 4)]);
    }
    samples.push_back(s);
  }
  require(!samples.empty(), "spring dataset is empty: " + path.string());
  return samples;
}

RolloutError::RolloutError(int step, ProjectionStatus status)
    : NumericalError("projection failed at rollout step " + std::to_string(step) + " (" +
                     to_string(status) + ")"),
      step_(step),
      status_(status) {}

Trajectory rollout(const StepModel& model, const State& initial, int n_steps,
                   const TransformSpec& transform, const SpringParams& params,
                   const RolloutProjection* projector) {
  require(n_steps >= 0, "rollout: n_steps must be non-negative");
  require_shape(transform.size() == 4, "rollout: transform must describe the 4 state features");
  Trajectory traj;
  const double e0 = energy(initial, params);
  traj.states.push_back(initial);
  traj.energies.push_back(e0);
  const Eigen::VectorXd no_input;
  State current = initial;
  for (int step = 1; step <= n_steps; ++step) {
    Eigen::VectorXd y = model(normalize(Eigen::VectorXd(current), transform));
    require_shape(y.size() == 4, "rollout: model must return a 4-vector");
    if (projector) {
      const double anchor = projector->anchor == EnergyAnchor::Initial ? e0 : energy(current, params);
      const EnergyConstraint shell(params, anchor, transform);
      ProjectionResult r = project(y, shell, no_input, projector->spec);
      if (!r.converged()) throw RolloutError(step, r.status);
      y = r.projected;
      traj.projections.push_back(std::move(r));
    }
    current = denormalize(y, transform);
    if (!current.allFinite()) throw NumericalError("rollout produced a non-finite state");
    traj.states.push_back(current);
    traj.energies.push_back(energy(current, params));
  }
  return traj;
}

Trajectory ground_truth(const State& initial, int n_steps, double delta_t, int n_substeps,
                        const SpringParams& params) {
  Trajectory traj;
  State s = initial;
  traj.states.push_back(s);
  traj.energies.push_back(energy(s, params));
  for (int i = 0; i < n_steps; ++i) {
    s = integrate(s, params, delta_t, n_substeps);
    traj.states.push_back(s);
    traj.energies.push_back(energy(s, params));
  }
  return traj;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                          double delta_t) {
  csv::Table table({"step", "t", "x1", "v1", "x2", "v2", "energy"});
  for (std::size_t i = 0; i < trajectory.states.size(); ++i) {
    const State& s = trajectory.states[i];
    table.add_row({std::to_string(i), csv::format_shortest(static_cast<double>(i) * delta_t),
                   csv::format_shortest(s(kX1)), csv::format_shortest(s(kV1)),
                   csv::format_shortest(s(kX2)), csv::format_shortest(s(kV2)),
                   csv::format_shortest(trajectory.energies[i])});
  }
  table.write(path);
}

} // namespace physproj::spring
