#include "physproj/csv.hpp"
#include "physproj/errors.hpp"
#include "physproj/experiments.hpp"
#include "physproj/parallel.hpp"
#include "physproj/physics_loss.hpp"
#include "physproj/springmass.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace physproj {

namespace {

using spring::State;
using spring::Trajectory;

struct SpringModels {
  SpringData data;
  Ensemble nn, pinn;
  bool has_pinn = false;
};

SpringModels train_spring_models(const ExperimentConfig& config, PhaseTimer& timer) {
  SpringModels m;
  timer.start("data_generation");
  m.data = prepare_spring_data(config);
  const auto dims = config.layer_dims();
  TrainConfig nn_cfg = config.train;
  nn_cfg.lambda_physics = 0.0;
  nn_cfg.lambda_split.reset();
  nn_cfg.seed = config.seed;
  std::vector<TrainHistory> histories;
  timer.start("training_nn");
  m.nn = ensemble_train(dims, m.data.normalized.train, m.data.normalized.validation, nn_cfg,
                        config.model.ensemble_members, nullptr, config.model.activation, &histories,
                        config.model.leaky_slope);
  write_history_csv(config.out_dir / "history_nn.csv", histories.front());
  if (config.model.train_pinn) {
    TrainConfig pinn_cfg = config.pinn_train();
    pinn_cfg.seed = config.seed;
    const SpringEnergyPhysics physics(config.spring.params, m.data.transform);
    timer.start("training_pinn");
    m.pinn = ensemble_train(dims, m.data.normalized.train, m.data.normalized.validation, pinn_cfg,
                            config.model.ensemble_members, &physics, config.model.activation, &histories,
                            config.model.leaky_slope);
    write_history_csv(config.out_dir / "history_pinn.csv", histories.front());
    m.has_pinn = true;
  }
  timer.stop();
  return m;
}

spring::StepModel step_model(const Ensemble& ensemble) {
  return [&ensemble](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    if (ensemble.members.size() == 1) return forward_one(ensemble.members.front(), z);
    return ensemble_predict(ensemble, z.transpose()).mean.row(0).transpose();
  };
}

/// Per-variable RMSE in normalized units over steps 1..N, then the energy
/// RMSE in joules against the initial energy.
Eigen::VectorXd trajectory_errors(const Trajectory& traj, const Trajectory& truth, const TransformSpec& tf) {
  const std::size_t n = truth.states.size() - 1;
  Eigen::MatrixXd pred(static_cast<Eigen::Index>(n), 4), target(static_cast<Eigen::Index>(n), 4);
  double e_sq = 0.0;
  const double e0 = truth.energies.front();
  for (std::size_t i = 1; i <= n; ++i) {
    pred.row(static_cast<Eigen::Index>(i - 1)) = normalize(Eigen::VectorXd(traj.states[i]), tf).transpose();
    target.row(static_cast<Eigen::Index>(i - 1)) = normalize(Eigen::VectorXd(truth.states[i]), tf).transpose();
    e_sq += (traj.energies[i] - e0) * (traj.energies[i] - e0);
  }
  Eigen::VectorXd out(5);
  out.head(4) = rmse_per_output(pred, target);
  out(4) = std::sqrt(e_sq / static_cast<double>(n));
  return out;
}

void write_projection_log(const std::filesystem::path& path, const Trajectory& traj) {
  csv::Table t({"step", "status", "iterations", "stationarity", "feasibility", "projection_seconds"});
  for (std::size_t i = 0; i < traj.projections.size(); ++i) {
    const auto& r = traj.projections[i];
    t.add_row({std::to_string(i + 1), to_string(r.status), std::to_string(r.iterations),
               csv::format_shortest(r.stationarity), csv::format_shortest(r.feasibility),
               csv::format_shortest(r.seconds)});
  }
  t.write(path);
}

std::vector<std::string> summary_header() {
  return {"model", "rmse_x1", "rmse_v1", "rmse_x2", "rmse_v2", "rmse_energy_J", "nonconverged"};
}

void add_summary_row(csv::Table& t, const ModelMetrics& m) {
  std::vector<std::string> row{m.model};
  for (Eigen::Index j = 0; j < 4; ++j) row.push_back(csv::format_shortest(m.rmse(j)));
  row.push_back(csv::format_shortest(m.energy_rmse));
  row.push_back(std::to_string(m.nonconverged));
  t.add_row(std::move(row));
}

} // namespace

MetricsReport run_spring_single(const ExperimentConfig& config) {
  config.validate();
  write_manifest(config, config.out_dir);
  PhaseTimer timer;
  SpringModels models = train_spring_models(config, timer);
  const auto& tf = models.data.transform;
  const auto& sp = config.spring;

  timer.start("ground_truth");
  const Trajectory truth = spring::ground_truth(sp.initial, sp.steps, sp.delta_t, sp.substeps, sp.params);
  spring::write_trajectory_csv(config.out_dir / "trajectory_ground_truth.csv", truth, sp.delta_t);

  const spring::RolloutProjection projection{config.projection, sp.anchor};
  struct Run {
    std::string name;
    const Ensemble* ensemble;
    bool project;
  };
  std::vector<Run> runs{{"nn", &models.nn, false}};
  if (models.has_pinn) runs.push_back({"pinn", &models.pinn, false});
  runs.push_back({"nn_projected", &models.nn, true});
  if (models.has_pinn) runs.push_back({"pinn_projected", &models.pinn, true});

  MetricsReport report;
  report.output_names = spring::state_names();
  csv::Table summary(summary_header());
  for (const auto& run : runs) {
    timer.start("rollout_" + run.name);
    const Trajectory traj = spring::rollout(step_model(*run.ensemble), sp.initial, sp.steps, tf, sp.params,
                                            run.project ? &projection : nullptr);
    spring::write_trajectory_csv(config.out_dir / ("trajectory_" + run.name + ".csv"), traj, sp.delta_t);
    if (run.project) write_projection_log(config.out_dir / ("projection_" + run.name + ".csv"), traj);
    const Eigen::VectorXd err = trajectory_errors(traj, truth, tf);
    ModelMetrics m;
    m.model = run.name;
    m.rmse = err.head(4);
    m.energy_rmse = err(4);
    report.models.push_back(m);
  }
  timer.stop();
  // fixed report order: nn, pinn, nn_projected, pinn_projected
  std::vector<ModelMetrics> ordered;
  for (const auto& name : model_names())
    for (const auto& m : report.models)
      if (m.model == name) ordered.push_back(m);
  report.models = std::move(ordered);
  for (const auto& m : report.models) add_summary_row(summary, m);
  summary.write(config.out_dir / "summary.csv");
  report.phase_seconds = timer.phases();
  timer.write(config.out_dir / "phase_times.csv");
  return report;
}

MetricsReport run_spring_many(const ExperimentConfig& config) {
  config.validate();
  write_manifest(config, config.out_dir);
  PhaseTimer timer;
  SpringModels models = train_spring_models(config, timer);
  const auto& tf = models.data.transform;
  const auto& sp = config.spring;
  const auto& test = models.data.split.test;
  require(static_cast<int>(test.size()) >= sp.trajectories,
          "spring-many: the test split has fewer samples than spring.trajectories");

  std::vector<std::string> names{"nn"};
  if (models.has_pinn) names.push_back("pinn");
  names.push_back("nn_projected");
  if (models.has_pinn) names.push_back("pinn_projected");
  auto ensemble_for = [&](const std::string& name) -> const Ensemble& {
    return name.rfind("pinn", 0) == 0 ? models.pinn : models.nn;
  };

  const std::size_t n_traj = static_cast<std::size_t>(sp.trajectories);
  const spring::RolloutProjection projection{config.projection, sp.anchor};
  // errors[k][model] = 5-vector (4 state RMSEs + energy RMSE), or empty on failure
  std::vector<std::vector<Eigen::VectorXd>> errors(n_traj, std::vector<Eigen::VectorXd>(names.size()));
  std::vector<State> initial(n_traj);
  timer.start("rollouts");
  parallel_for(
      n_traj,
      [&](std::size_t k) {
        initial[k] = models.data.inputs.row(test[k]).transpose();
        const Trajectory truth = spring::ground_truth(initial[k], sp.steps, sp.delta_t, sp.substeps, sp.params);
        for (std::size_t j = 0; j < names.size(); ++j) {
          const bool project = names[j].find("_projected") != std::string::npos;
          try {
            const Trajectory traj = spring::rollout(step_model(ensemble_for(names[j])), initial[k], sp.steps, tf,
                                                    sp.params, project ? &projection : nullptr);
            errors[k][j] = trajectory_errors(traj, truth, tf);
          } catch (const NumericalError&) {
            errors[k][j].resize(0);
          }
        }
      },
      static_cast<std::size_t>(config.threads));
  timer.stop();

  static const std::array<const char*, 5> variables{"x1", "v1", "x2", "v2", "energy_J"};
  csv::Table records({"trajectory", "model", "variable", "rmse", "converged"});
  csv::Table ics({"trajectory", "x1", "v1", "x2", "v2", "energy_J"});
  for (std::size_t k = 0; k < n_traj; ++k) {
    ics.add_row({std::to_string(k), csv::format_shortest(initial[k](0)), csv::format_shortest(initial[k](1)),
                 csv::format_shortest(initial[k](2)), csv::format_shortest(initial[k](3)),
                 csv::format_shortest(spring::energy(initial[k], sp.params))});
    for (std::size_t j = 0; j < names.size(); ++j)
      for (std::size_t v = 0; v < variables.size(); ++v) {
        const bool ok = errors[k][j].size() == 5;
        records.add_row({std::to_string(k), names[j], variables[v],
                         ok ? csv::format_shortest(errors[k][j](static_cast<Eigen::Index>(v))) : "nan",
                         ok ? "1" : "0"});
      }
  }
  records.write(config.out_dir / "trajectory_rmse.csv");
  ics.write(config.out_dir / "initial_conditions.csv");

  MetricsReport report;
  report.output_names = spring::state_names();
  csv::Table summary({"model", "mean_rmse_x1", "mean_rmse_v1", "mean_rmse_x2", "mean_rmse_v2",
                      "mean_rmse_energy_J", "median_rmse_energy_J", "nonconverged"});
  for (std::size_t j = 0; j < names.size(); ++j) {
    ModelMetrics m;
    m.model = names[j];
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(5);
    std::vector<double> energies;
    for (std::size_t k = 0; k < n_traj; ++k) {
      if (errors[k][j].size() != 5) {
        ++m.nonconverged;
        continue;
      }
      sum += errors[k][j];
      energies.push_back(errors[k][j](4));
    }
    const double count = static_cast<double>(energies.size());
    double median = std::numeric_limits<double>::quiet_NaN();
    if (!energies.empty()) {
      std::sort(energies.begin(), energies.end());
      const std::size_t h = energies.size() / 2;
      median = energies.size() % 2 ? energies[h] : 0.5 * (energies[h - 1] + energies[h]);
    }
    m.rmse = sum.head(4) / count;
    m.energy_rmse = sum(4) / count;
    std::vector<std::string> row{m.model};
    for (Eigen::Index v = 0; v < 4; ++v) row.push_back(csv::format_shortest(m.rmse(v)));
    row.push_back(csv::format_shortest(m.energy_rmse));
    row.push_back(csv::format_shortest(median));
    row.push_back(std::to_string(m.nonconverged));
    summary.add_row(std::move(row));
    report.models.push_back(m);
  }
  summary.write(config.out_dir / "summary.csv");

  csv::Table rates({"comparison", "r_mean_pct", "r_all_pct", "trajectories"});
  for (const std::string base : {"nn", "pinn"}) {
    const auto bi = std::find(names.begin(), names.end(), base);
    const auto pi = std::find(names.begin(), names.end(), base + "_projected");
    if (bi == names.end() || pi == names.end()) continue;
    const std::size_t b = static_cast<std::size_t>(bi - names.begin());
    const std::size_t p = static_cast<std::size_t>(pi - names.begin());
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < n_traj; ++k)
      if (errors[k][b].size() == 5 && errors[k][p].size() == 5) rows.push_back(k);
    if (rows.empty()) continue;
    Eigen::MatrixXd base_rmse(static_cast<Eigen::Index>(rows.size()), 4);
    Eigen::MatrixXd proj_rmse(static_cast<Eigen::Index>(rows.size()), 4);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      base_rmse.row(static_cast<Eigen::Index>(r)) = errors[rows[r]][b].head(4).transpose();
      proj_rmse.row(static_cast<Eigen::Index>(r)) = errors[rows[r]][p].head(4).transpose();
    }
    const ImprovementRates ir = improvement_rates(base_rmse, proj_rmse);
    report.rates.emplace_back(base + "->" + base + "_projected", ir);
    rates.add_row({base + "->" + base + "_projected", csv::format_shortest(ir.r_mean),
                   csv::format_shortest(ir.r_all), std::to_string(rows.size())});
  }
  rates.write(config.out_dir / "improvement_rates.csv");
  report.phase_seconds = timer.phases();
  timer.write(config.out_dir / "phase_times.csv");
  return report;
}

} // namespace physproj
