#include "physproj/csv.hpp"
#include "physproj/errors.hpp"
#include "physproj/experiments.hpp"
#include "physproj/parallel.hpp"
#include "physproj/physics_loss.hpp"
#include "physproj/projector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace physproj {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

double focus_mean(const Eigen::VectorXd& per_output) {
  double s = 0.0;
  for (Eigen::Index j : ltp::focus_outputs()) s += per_output(j);
  return s / static_cast<double>(ltp::focus_outputs().size());
}

std::string law_label(const std::array<bool, 3>& laws) {
  static const std::array<const char*, 3> names{"ideal_gas", "current", "quasi_neutrality"};
  std::string s;
  for (int j = 0; j < 3; ++j)
    if (laws[static_cast<std::size_t>(j)]) s += (s.empty() ? "" : "+") + std::string(names[static_cast<std::size_t>(j)]);
  return s.empty() ? "none" : s;
}

std::string arch_label(const std::vector<int>& hidden) {
  std::string s;
  for (int h : hidden) s += (s.empty() ? "" : "x") + std::to_string(h);
  return s;
}

/// Normalized predictions, their projections and per-row convergence.
struct Projected {
  Eigen::MatrixXd base, projected;
  std::vector<Eigen::Index> converged_rows;
  int nonconverged = 0;
  double seconds = 0.0;
};

Projected project_predictions(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& inputs_phys,
                              const TransformSpec& out_tf, const ltp::LtpOptions& options,
                              const ProjectionSpec& spec) {
  Projected p;
  p.base = pred;
  p.projected = pred;
  if (options.active_count() == 0) {
    p.converged_rows.resize(static_cast<std::size_t>(pred.rows()));
    std::iota(p.converged_rows.begin(), p.converged_rows.end(), Eigen::Index{0});
    return p;
  }
  const auto constraints = ltp::ltp_constraints(ltp::standard_schema(), out_tf, options);
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = project_batch(pred, constraints, inputs_phys, spec);
  p.seconds = seconds_since(t0);
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    const auto& r = results[static_cast<std::size_t>(i)];
    if (r.converged()) {
      p.projected.row(i) = r.projected.transpose();
      p.converged_rows.push_back(i);
    } else {
      ++p.nonconverged;
    }
  }
  return p;
}

/// RMS of each scaled residual over the given rows of normalized outputs.
Eigen::Vector3d compliance(const Eigen::MatrixXd& outputs_norm, const Eigen::MatrixXd& inputs_phys,
                           const std::vector<Eigen::Index>& rows, const TransformSpec& out_tf,
                           const ltp::LtpOptions& options) {
  Eigen::Vector3d sq = Eigen::Vector3d::Zero();
  for (Eigen::Index i : rows) {
    const Eigen::VectorXd y = denormalize(Eigen::VectorXd(outputs_norm.row(i).transpose()), out_tf);
    const Eigen::Vector3d r =
        ltp::scaled_residuals(inputs_phys.row(i).transpose(), y, ltp::standard_schema(), options);
    sq += r.cwiseAbs2();
  }
  return (sq / static_cast<double>(std::max<std::size_t>(rows.size(), 1))).cwiseSqrt();
}

struct PairedScores {
  double focus_base = 0.0, focus_projected = 0.0, all_base = 0.0, all_projected = 0.0;
};

/// RMSEs of base and projected predictions over the rows where the
/// projection converged.
PairedScores paired_scores(const Projected& p, const Eigen::MatrixXd& targets_norm) {
  require(!p.converged_rows.empty(), "no projection converged on the test set");
  const Eigen::MatrixXd t = select_rows(targets_norm, p.converged_rows);
  const Eigen::VectorXd eb = rmse_per_output(select_rows(p.base, p.converged_rows), t);
  const Eigen::VectorXd ep = rmse_per_output(select_rows(p.projected, p.converged_rows), t);
  return {focus_mean(eb), focus_mean(ep), eb.mean(), ep.mean()};
}

Eigen::MatrixXd predict(const Ensemble& ens, const Eigen::MatrixXd& inputs_norm) {
  return ensemble_predict(ens, inputs_norm).mean;
}

/// Physical inputs of the electron-density trend: log-spaced pressures at the
/// configured current and radius.
Eigen::MatrixXd trend_inputs(const SweepSettings& s) {
  Eigen::MatrixXd x(s.trend_points, 3);
  const double lo = std::log10(s.trend_pressure_min), hi = std::log10(s.trend_pressure_max);
  for (int i = 0; i < s.trend_points; ++i) {
    const double t = s.trend_points == 1 ? 0.0 : static_cast<double>(i) / (s.trend_points - 1);
    x(i, ltp::kPressure) = std::pow(10.0, lo + t * (hi - lo)) * ltp::kPascalPerTorr;
    x(i, ltp::kCurrent) = s.trend_current;
    x(i, ltp::kRadius) = s.trend_radius;
  }
  return x;
}

std::vector<std::string> trend_header(const std::string& key) {
  return {key, "pressure_torr", "ne_reference", "ne_nn", "ne_projected", "converged"};
}

void add_trend_rows(csv::Table& table, const std::string& key, const Ensemble& ens, const LtpPrepared& prep,
                    const ExperimentConfig& config) {
  const Eigen::MatrixXd x = trend_inputs(config.sweep);
  const Eigen::MatrixXd pred = predict(ens, normalize_rows(x, prep.input_transform));
  const auto constraints = ltp::ltp_constraints(ltp::standard_schema(), prep.output_transform, ltp_options(config));
  const auto results = project_batch(pred, constraints, x, config.projection);
  const bool synthetic = config.ltp.dataset.empty();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& r = results[static_cast<std::size_t>(i)];
    const double ne_nn = denormalize(Eigen::VectorXd(pred.row(i).transpose()), prep.output_transform)(ltp::kElectrons);
    const double ne_proj = denormalize(r.projected, prep.output_transform)(ltp::kElectrons);
    const double ne_ref = synthetic
                              ? ltp::synthetic_outputs(x.row(i).transpose(), config.ltp.electrons_in_pressure)(ltp::kElectrons)
                              : std::numeric_limits<double>::quiet_NaN();
    table.add_row({key, csv::format_shortest(x(i, ltp::kPressure) / ltp::kPascalPerTorr), csv::format_shortest(ne_ref),
                   csv::format_shortest(ne_nn), r.converged() ? csv::format_shortest(ne_proj) : "nan",
                   r.converged() ? "1" : "0"});
  }
}

TrainConfig nn_train_config(const ExperimentConfig& config, std::uint64_t seed) {
  TrainConfig t = config.train;
  t.lambda_physics = 0.0;
  t.lambda_split.reset();
  t.seed = seed;
  return t;
}

std::vector<int> ltp_dims(const std::vector<int>& hidden) {
  std::vector<int> dims{static_cast<int>(ltp::kInputCount)};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(static_cast<int>(ltp::kOutputCount));
  return dims;
}

} // namespace

MetricsReport run_ltp_compare(const ExperimentConfig& config) {
  config.validate();
  write_manifest(config, config.out_dir);
  PhaseTimer timer;
  timer.start("data_generation");
  const ltp::LtpData data = load_or_generate_ltp(config, config.ltp.samples, config.seed);
  const LtpPrepared prep = prepare_ltp(data, split_indices(data.size(), config.fractions, config.seed), config);
  const ltp::LtpData test = data.subset(prep.split.test);
  const Eigen::MatrixXd& test_in = prep.normalized.test.inputs;
  const Eigen::MatrixXd& test_out = prep.normalized.test.targets;
  const ltp::LtpOptions options = ltp_options(config);
  const auto& schema = ltp::standard_schema();

  std::vector<TrainHistory> histories;
  timer.start("training_nn");
  const Ensemble nn = ensemble_train(config.layer_dims(), prep.normalized.train, prep.normalized.validation,
                                     nn_train_config(config, config.seed), config.model.ensemble_members, nullptr,
                                     config.model.activation, &histories, config.model.leaky_slope);
  write_history_csv(config.out_dir / "history_nn.csv", histories.front());
  std::vector<std::pair<std::string, const Ensemble*>> bases{{"nn", &nn}};
  Ensemble pinn;
  if (config.model.train_pinn) {
    TrainConfig pt = config.pinn_train();
    pt.seed = config.seed;
    ltp::LtpOptions pinn_options = options;
    pinn_options.electron_scale_floor = config.ltp.pinn_electron_scale_floor;
    const LtpPhysics physics(prep.input_transform, prep.output_transform, *pt.lambda_split, pinn_options);
    timer.start("training_pinn");
    pinn = ensemble_train(config.layer_dims(), prep.normalized.train, prep.normalized.validation, pt,
                          config.model.ensemble_members, &physics, config.model.activation, &histories,
                          config.model.leaky_slope);
    write_history_csv(config.out_dir / "history_pinn.csv", histories.front());
    bases.emplace_back("pinn", &pinn);
  }
  StoredModel stored{PhysicalSystem::Ltp, nn, prep.input_transform, prep.output_transform};
  save_model(config.out_dir / "model_nn", stored);

  MetricsReport report;
  report.output_names = schema.output_names;
  struct Prediction {
    std::string name;
    Eigen::MatrixXd values;
    std::vector<Eigen::Index> rows;  // rows entering the metrics
  };
  std::vector<Prediction> predictions;
  csv::Table ablation({"base", "laws", "rmse_focus", "rmse_all", "compliance_ideal_gas", "compliance_current",
                       "compliance_quasi_neutrality", "nonconverged", "projection_seconds"});
  for (const auto& [name, ens] : bases) {
    timer.start("inference_" + name);
    const Eigen::MatrixXd pred = predict(*ens, test_in);
    timer.start("projection_" + name);
    const Projected p = project_predictions(pred, test.inputs, prep.output_transform, options, config.projection);
    timer.stop();

    ModelMetrics base;
    base.model = name;
    base.rmse = rmse_per_output(pred, test_out);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(pred.rows()));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    base.compliance = compliance(pred, test.inputs, all, prep.output_transform, options);
    ModelMetrics proj;
    proj.model = name + "_projected";
    proj.rmse = rmse_per_output(select_rows(p.projected, p.converged_rows), select_rows(test_out, p.converged_rows));
    proj.compliance = compliance(p.projected, test.inputs, p.converged_rows, prep.output_transform, options);
    proj.nonconverged = p.nonconverged;
    report.models.push_back(base);
    report.models.push_back(proj);
    predictions.push_back({name, pred, all});
    predictions.push_back({name + "_projected", p.projected, p.converged_rows});

    timer.start("ablation_" + name);
    for (int mask = 0; mask < 8; ++mask) {
      ltp::LtpOptions o = options;
      for (int j = 0; j < 3; ++j) o.laws[static_cast<std::size_t>(j)] = (mask >> j) & 1;
      const Projected q = project_predictions(pred, test.inputs, prep.output_transform, o, config.projection);
      const Eigen::MatrixXd t = select_rows(test_out, q.converged_rows);
      const Eigen::VectorXd e = rmse_per_output(select_rows(q.projected, q.converged_rows), t);
      const Eigen::Vector3d c = compliance(q.projected, test.inputs, q.converged_rows, prep.output_transform, options);
      ablation.add_row({name, law_label(o.laws), csv::format_shortest(focus_mean(e)), csv::format_shortest(e.mean()),
                        csv::format_shortest(c(0)), csv::format_shortest(c(1)), csv::format_shortest(c(2)),
                        std::to_string(q.nonconverged), csv::format_shortest(q.seconds)});
    }
    timer.stop();
  }
  std::vector<ModelMetrics> ordered;
  for (const auto& name : model_names())
    for (const auto& m : report.models)
      if (m.model == name) ordered.push_back(m);
  report.models = std::move(ordered);
  ablation.write(config.out_dir / "ablation_laws.csv");

  std::vector<std::string> header{"output"};
  for (const auto& m : report.models) header.push_back(m.model);
  csv::Table per_output(header), per_output_phys(header);
  // physical-unit RMSE of the denormalized predictions
  std::vector<Eigen::VectorXd> phys_rmse;
  for (const auto& m : report.models)
    for (const auto& p : predictions)
      if (p.name == m.model)
        phys_rmse.push_back(rmse_per_output(denormalize_rows(select_rows(p.values, p.rows), prep.output_transform),
                                            select_rows(test.outputs, p.rows)));
  for (Eigen::Index j = 0; j < ltp::kOutputCount; ++j) {
    std::vector<std::string> row{schema.output_names[static_cast<std::size_t>(j)]};
    std::vector<std::string> row_phys = row;
    for (std::size_t k = 0; k < report.models.size(); ++k) {
      row.push_back(csv::format_shortest(report.models[k].rmse(j)));
      row_phys.push_back(csv::format_shortest(phys_rmse[k](j)));
    }
    per_output.add_row(std::move(row));
    per_output_phys.add_row(std::move(row_phys));
  }
  per_output.write(config.out_dir / "per_output_rmse.csv");
  per_output_phys.write(config.out_dir / "per_output_rmse_physical.csv");

  csv::Table summary({"model", "rmse_focus", "rmse_all", "compliance_ideal_gas", "compliance_current",
                      "compliance_quasi_neutrality", "nonconverged"});
  for (const auto& m : report.models)
    summary.add_row({m.model, csv::format_shortest(focus_mean(m.rmse)), csv::format_shortest(m.rmse.mean()),
                     csv::format_shortest(m.compliance(0)), csv::format_shortest(m.compliance(1)),
                     csv::format_shortest(m.compliance(2)), std::to_string(m.nonconverged)});
  summary.write(config.out_dir / "summary.csv");

  std::vector<std::string> pred_header = schema.input_names;
  pred_header.insert(pred_header.end(), schema.output_names.begin(), schema.output_names.end());
  Eigen::MatrixXd truth(test.size(), 3 + ltp::kOutputCount);
  truth << test.inputs, test.outputs;
  csv::write_matrix(config.out_dir / "test_targets.csv", pred_header, truth, true);
  for (const auto& p : predictions) {
    Eigen::MatrixXd m(test.size(), 3 + ltp::kOutputCount);
    m << test.inputs, denormalize_rows(p.values, prep.output_transform);
    csv::write_matrix(config.out_dir / ("test_predictions_" + p.name + ".csv"), pred_header, m, true);
  }

  report.phase_seconds = timer.phases();
  timer.write(config.out_dir / "phase_times.csv");
  return report;
}

std::vector<ArchitectureRow> run_ablation_arch(const ExperimentConfig& config) {
  config.validate();
  write_manifest(config, config.out_dir);
  const ltp::LtpData data = load_or_generate_ltp(config, config.ltp.samples, config.seed);
  const LtpPrepared prep = prepare_ltp(data, split_indices(data.size(), config.fractions, config.seed), config);
  const ltp::LtpData test = data.subset(prep.split.test);
  const ltp::LtpOptions options = ltp_options(config);

  std::vector<ArchitectureRow> rows;
  csv::Table trend(trend_header("architecture"));
  for (const auto& hidden : config.sweep.architectures) {
    ArchitectureRow row;
    row.hidden = hidden;
    const auto dims = ltp_dims(hidden);
    row.parameters = static_cast<long long>(parameter_count(dims));
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const Ensemble ens = ensemble_train(dims, prep.normalized.train, prep.normalized.validation,
                                          nn_train_config(config, config.seed), config.model.ensemble_members,
                                          nullptr, config.model.activation, nullptr, config.model.leaky_slope);
      row.training_seconds = seconds_since(t0);
      const Projected p = project_predictions(predict(ens, prep.normalized.test.inputs), test.inputs,
                                              prep.output_transform, options, config.projection);
      const PairedScores s = paired_scores(p, prep.normalized.test.targets);
      row.rmse_all_nn = s.all_base;
      row.rmse_all_projected = s.all_projected;
      row.variation_all = rmse_variation_rate(s.all_base, s.all_projected);
      row.rmse_focus_nn = s.focus_base;
      row.rmse_focus_projected = s.focus_projected;
      row.variation_focus = rmse_variation_rate(s.focus_base, s.focus_projected);
      row.nonconverged = p.nonconverged;
      add_trend_rows(trend, arch_label(hidden), ens, prep, config);
    } catch (const NumericalError& e) {
      row.error = e.what();
    } catch (const ValidationError& e) {
      row.error = e.what();
    }
    rows.push_back(row);
  }

  csv::Table table({"architecture", "parameters", "rmse_all_nn", "rmse_all_projected", "variation_all_pct",
                    "rmse_focus_nn", "rmse_focus_projected", "variation_focus_pct", "nonconverged", "error",
                    "training_seconds"});
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    table.add_row({arch_label(r.hidden), std::to_string(r.parameters), csv::format_shortest(r.rmse_all_nn),
                   csv::format_shortest(r.rmse_all_projected), csv::format_shortest(r.variation_all),
                   csv::format_shortest(r.rmse_focus_nn), csv::format_shortest(r.rmse_focus_projected),
                   csv::format_shortest(r.variation_focus), std::to_string(r.nonconverged), err,
                   csv::format_shortest(r.training_seconds)});
  }
  table.write(config.out_dir / "architectures.csv");
  trend.write(config.out_dir / "trend_electron_density.csv");
  return rows;
}

namespace {

/// Fixed test set plus the pool that training samples are drawn from.
struct SamplePool {
  ltp::LtpData draw, test;
};

SamplePool make_pool(const ExperimentConfig& config) {
  const auto& s = config.sweep;
  const ltp::LtpData pool = load_or_generate_ltp(config, s.pool_size, config.seed);
  require(pool.size() > s.test_size, "sweep: dataset smaller than sweep.test_size");
  const double n = static_cast<double>(pool.size());
  const double test_frac = static_cast<double>(s.test_size) / n;
  const SplitIndices split = split_indices(pool.size(), {1.0 - test_frac, 0.0, test_frac}, config.seed);
  return {pool.subset(split.train), pool.subset(split.test)};
}

struct Replicate {
  std::uint64_t seed = 0;
  PairedScores scores;
  int nonconverged = 0;
  bool failed = false;
  std::string error;
  double data_seconds = 0.0, training_seconds = 0.0, inference_seconds = 0.0, projection_seconds = 0.0;
  Ensemble model;
  LtpPrepared prep;
};

/// Draws `size` samples, trains on a train/validation split of them and
/// scores NN and projected NN on the fixed test set, in the replicate's own
/// normalized space.
Replicate run_replicate(const ExperimentConfig& config, const SamplePool& pool, int size, int rep) {
  Replicate r;
  r.seed = mix_seed(config.seed, static_cast<std::uint64_t>(size), static_cast<std::uint64_t>(rep));
  auto t0 = std::chrono::steady_clock::now();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool.draw.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(r.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(size));
  const ltp::LtpData sample = pool.draw.subset(idx);
  const int n_val = std::max(1, static_cast<int>(std::lround(config.sweep.validation_fraction * size)));
  SplitIndices split;
  for (int i = 0; i < size; ++i) (i < n_val ? split.validation : split.train).push_back(i);
  r.prep = prepare_ltp(sample, split, config);
  const Eigen::MatrixXd test_in = normalize_rows(pool.test.inputs, r.prep.input_transform);
  const Eigen::MatrixXd test_out = normalize_rows(pool.test.outputs, r.prep.output_transform);
  r.data_seconds = seconds_since(t0);
  try {
    t0 = std::chrono::steady_clock::now();
    r.model = ensemble_train(config.layer_dims(), r.prep.normalized.train, r.prep.normalized.validation,
                             nn_train_config(config, r.seed), config.model.ensemble_members, nullptr,
                             config.model.activation, nullptr, config.model.leaky_slope);
    r.training_seconds = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const Eigen::MatrixXd pred = predict(r.model, test_in);
    r.inference_seconds = seconds_since(t0);
    const Projected p = project_predictions(pred, pool.test.inputs, r.prep.output_transform, ltp_options(config),
                                            config.projection);
    r.projection_seconds = p.seconds;
    r.nonconverged = p.nonconverged;
    r.scores = paired_scores(p, test_out);
  } catch (const NumericalError& e) {
    r.failed = true;
    r.error = e.what();
  } catch (const ValidationError& e) {
    r.failed = true;
    r.error = e.what();
  }
  return r;
}

} // namespace

std::vector<SmallSampleRow> run_small_samples(const ExperimentConfig& config) {
  config.validate();
  write_manifest(config, config.out_dir);
  const SamplePool pool = make_pool(config);
  const int reps = config.sweep.resamples;

  csv::Table runs({"size", "resample", "seed", "rmse_focus_nn", "rmse_focus_projected", "rmse_all_nn",
                   "rmse_all_projected", "nonconverged", "failed", "training_seconds"});
  csv::Table trend(trend_header("size"));
  std::vector<SmallSampleRow> rows;
  for (int size : config.sweep.sizes) {
    std::vector<Replicate> results(static_cast<std::size_t>(reps));
    parallel_for(
        results.size(), [&](std::size_t k) { results[k] = run_replicate(config, pool, size, static_cast<int>(k)); },
        static_cast<std::size_t>(config.threads));
    SmallSampleRow row;
    row.size = size;
    for (std::size_t k = 0; k < results.size(); ++k) {
      const Replicate& r = results[k];
      runs.add_row({std::to_string(size), std::to_string(k), std::to_string(r.seed),
                    r.failed ? "nan" : csv::format_shortest(r.scores.focus_base),
                    r.failed ? "nan" : csv::format_shortest(r.scores.focus_projected),
                    r.failed ? "nan" : csv::format_shortest(r.scores.all_base),
                    r.failed ? "nan" : csv::format_shortest(r.scores.all_projected), std::to_string(r.nonconverged),
                    r.failed ? "1" : "0", csv::format_shortest(r.training_seconds)});
      if (r.failed) {
        ++row.failed_runs;
        continue;
      }
      ++row.resamples;
      row.nonconverged += r.nonconverged;
      row.rmse_focus_nn += r.scores.focus_base;
      row.rmse_focus_projected += r.scores.focus_projected;
      row.rmse_all_nn += r.scores.all_base;
      row.rmse_all_projected += r.scores.all_projected;
    }
    if (row.resamples > 0) {
      const double n = row.resamples;
      row.rmse_focus_nn /= n;
      row.rmse_focus_projected /= n;
      row.rmse_all_nn /= n;
      row.rmse_all_projected /= n;
      row.variation_focus = rmse_variation_rate(row.rmse_focus_nn, row.rmse_focus_projected);
      row.variation_all = rmse_variation_rate(row.rmse_all_nn, row.rmse_all_projected);
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.rmse_focus_nn = row.rmse_focus_projected = row.rmse_all_nn = row.rmse_all_projected = nan;
      row.variation_focus = row.variation_all = nan;
    }
    for (const Replicate& r : results)
      if (!r.failed) {
        add_trend_rows(trend, std::to_string(size), r.model, r.prep, config);
        break;
      }
    rows.push_back(row);
  }

  csv::Table summary({"size", "resamples", "rmse_focus_nn", "rmse_focus_projected", "variation_focus_pct",
                      "rmse_all_nn", "rmse_all_projected", "variation_all_pct", "nonconverged", "failed_runs"});
  for (const auto& r : rows)
    summary.add_row({std::to_string(r.size), std::to_string(r.resamples), csv::format_shortest(r.rmse_focus_nn),
                     csv::format_shortest(r.rmse_focus_projected), csv::format_shortest(r.variation_focus),
                     csv::format_shortest(r.rmse_all_nn), csv::format_shortest(r.rmse_all_projected),
                     csv::format_shortest(r.variation_all), std::to_string(r.nonconverged),
                     std::to_string(r.failed_runs)});
  summary.write(config.out_dir / "summary.csv");
  runs.write(config.out_dir / "runs.csv");
  trend.write(config.out_dir / "trend_electron_density.csv");
  return rows;
}

std::vector<TimingRow> run_timing(const ExperimentConfig& config) {
  config.validate();
  write_manifest(config, config.out_dir);
  const SamplePool pool = make_pool(config);
  std::vector<TimingRow> rows;
  csv::Table table({"size", "resample", "rmse_focus_nn", "rmse_focus_projected", "nonconverged", "data_seconds",
                    "training_seconds", "inference_seconds", "projection_seconds", "total_seconds",
                    "projection_overhead_wallclock_pct"});
  for (int size : config.sweep.sizes) {
    for (int rep = 0; rep < config.sweep.resamples; ++rep) {
      const Replicate r = run_replicate(config, pool, size, rep);
      if (r.failed) throw NumericalError("timing run failed at size " + std::to_string(size) + ": " + r.error);
      TimingRow row;
      row.size = size;
      row.rmse_focus_nn = r.scores.focus_base;
      row.rmse_focus_projected = r.scores.focus_projected;
      row.nonconverged = r.nonconverged;
      row.data_seconds = r.data_seconds;
      row.training_seconds = r.training_seconds;
      row.inference_seconds = r.inference_seconds;
      row.projection_seconds = r.projection_seconds;
      table.add_row({std::to_string(size), std::to_string(rep), csv::format_shortest(row.rmse_focus_nn),
                     csv::format_shortest(row.rmse_focus_projected), std::to_string(row.nonconverged),
                     csv::format_shortest(row.data_seconds), csv::format_shortest(row.training_seconds),
                     csv::format_shortest(row.inference_seconds), csv::format_shortest(row.projection_seconds),
                     csv::format_shortest(row.total_seconds()), csv::format_shortest(row.overhead_pct())});
      rows.push_back(row);
    }
  }
  table.write(config.out_dir / "timing.csv");
  return rows;
}

} // namespace physproj
