#include "physproj/config.hpp"
#include "physproj/constraints.hpp"
#include "physproj/csv.hpp"
#include "physproj/errors.hpp"
#include "physproj/experiments.hpp"
#include "physproj/ltp.hpp"
#include "physproj/physics_loss.hpp"
#include "physproj/projector.hpp"
#include "physproj/springmass.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>
#include <optional>

using namespace physproj;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--seed", o.seed, "random seed (overrides the config)");
  cmd->add_option("--out-dir", o.out_dir, "output directory (overrides the config)");
}

void apply_overrides(ExperimentConfig& config, const CommonOptions& o) {
  if (o.seed) config.seed = *o.seed;
  if (o.out_dir) config.out_dir = *o.out_dir;
  config.validate();
}

ExperimentConfig resolve(const CommonOptions& o, ExperimentKind fallback) {
  ExperimentConfig config = load_config(o.config, fallback);
  apply_overrides(config, o);
  return config;
}

void gen_data(const std::string& what, const CommonOptions& o) {
  if (what == "spring") {
    ExperimentConfig c = resolve(o, ExperimentKind::SpringSingle);
    require(c.system == PhysicalSystem::Spring, "gen-data spring: config is not a spring-mass config");
    const auto& s = c.spring;
    const auto samples = spring::generate_dataset(s.params, s.e_max, s.samples, s.delta_t, s.substeps, c.seed);
    write_manifest(c, c.out_dir);
    spring::write_dataset_csv(c.out_dir / "spring_dataset.csv", samples);
    std::cout << "wrote " << samples.size() << " transitions to " << (c.out_dir / "spring_dataset.csv").string() << "\n";
  } else {
    ExperimentConfig c = resolve(o, ExperimentKind::LtpCompare);
    require(c.system == PhysicalSystem::Ltp, "gen-data ltp-synthetic: config is not a plasma config");
    const auto data = ltp::generate_synthetic_ltp(c.ltp.samples, c.seed, c.ltp.electrons_in_pressure);
    write_manifest(c, c.out_dir);
    ltp::write_ltp_csv(c.out_dir / "ltp_dataset.csv", data);
    std::cout << "wrote " << data.size() << " samples to " << (c.out_dir / "ltp_dataset.csv").string() << "\n";
  }
}

void train_models(const CommonOptions& o) {
  ExperimentConfig c = resolve(o, ExperimentKind::SpringSingle);
  write_manifest(c, c.out_dir);
  std::vector<TrainHistory> histories;
  TrainConfig nn_cfg = c.train;
  nn_cfg.lambda_physics = 0.0;
  nn_cfg.lambda_split.reset();
  nn_cfg.seed = c.seed;
  TrainConfig pinn_cfg = c.pinn_train();
  pinn_cfg.seed = c.seed;

  StoredModel nn, pinn;
  const Dataset* train_set = nullptr;
  const Dataset* val_set = nullptr;
  std::unique_ptr<PhysicsTerm> physics;
  SpringData sd;
  LtpPrepared lp;
  if (c.system == PhysicalSystem::Spring) {
    sd = prepare_spring_data(c);
    nn = {PhysicalSystem::Spring, {}, sd.transform, sd.transform};
    physics = std::make_unique<SpringEnergyPhysics>(c.spring.params, sd.transform);
    train_set = &sd.normalized.train;
    val_set = &sd.normalized.validation;
  } else {
    const auto data = load_or_generate_ltp(c, c.ltp.samples, c.seed);
    lp = prepare_ltp(data, split_indices(data.size(), c.fractions, c.seed), c);
    nn = {PhysicalSystem::Ltp, {}, lp.input_transform, lp.output_transform};
    ltp::LtpOptions opts = ltp_options(c);
    opts.electron_scale_floor = c.ltp.pinn_electron_scale_floor;
    physics = std::make_unique<LtpPhysics>(lp.input_transform, lp.output_transform, *pinn_cfg.lambda_split, opts);
    train_set = &lp.normalized.train;
    val_set = &lp.normalized.validation;
  }
  pinn = nn;
  nn.ensemble = ensemble_train(c.layer_dims(), *train_set, *val_set, nn_cfg, c.model.ensemble_members, nullptr,
                               c.model.activation, &histories, c.model.leaky_slope);
  write_history_csv(c.out_dir / "history_nn.csv", histories.front());
  save_model(c.out_dir / "model_nn", nn);
  std::cout << "saved " << (c.out_dir / "model_nn").string() << "\n";
  if (c.model.train_pinn) {
    pinn.ensemble = ensemble_train(c.layer_dims(), *train_set, *val_set, pinn_cfg, c.model.ensemble_members,
                                   physics.get(), c.model.activation, &histories, c.model.leaky_slope);
    write_history_csv(c.out_dir / "history_pinn.csv", histories.front());
    save_model(c.out_dir / "model_pinn", pinn);
    std::cout << "saved " << (c.out_dir / "model_pinn").string() << "\n";
  }
}

void project_inputs(const CommonOptions& o) {
  ExperimentConfig c = resolve(o, ExperimentKind::SpringSingle);
  require(!c.io.model_dir.empty() && !c.io.inputs.empty(), "project: io.model_dir and io.inputs are required");
  const StoredModel model = load_model(c.io.model_dir);
  require(model.system == c.system, "project: model system does not match the config");
  const std::vector<std::string> in_names = model.input_transform.names();
  const std::vector<std::string> out_names = model.output_transform.names();

  const csv::NumericTable table = csv::read_numeric(c.io.inputs);
  Eigen::MatrixXd x(table.values.rows(), static_cast<Eigen::Index>(in_names.size()));
  for (std::size_t j = 0; j < in_names.size(); ++j)
    x.col(static_cast<Eigen::Index>(j)) = table.values.col(table.column(in_names[j]));
  require(x.rows() > 0, "project: no input rows");

  const Eigen::MatrixXd pred = ensemble_predict(model.ensemble, normalize_rows(x, model.input_transform)).mean;
  std::vector<ProjectionResult> results;
  if (model.system == PhysicalSystem::Spring) {
    const auto& params = c.spring.params;
    const TransformSpec tf = model.output_transform;
    ConstraintFactory factory = [&](Eigen::Index row) -> std::unique_ptr<ConstraintSet> {
      const spring::State s = x.row(row).transpose();
      return std::make_unique<EnergyConstraint>(params, spring::energy(s, params), tf);
    };
    results = project_batch(pred, factory, Eigen::MatrixXd(x.rows(), 0), c.projection);
  } else {
    const auto constraints = ltp::ltp_constraints(ltp::standard_schema(), model.output_transform, ltp_options(c));
    results = project_batch(pred, constraints, x, c.projection);
  }

  std::vector<std::string> header = in_names;
  for (const auto& n : out_names) header.push_back("nn_" + n);
  for (const auto& n : out_names) header.push_back("projected_" + n);
  for (const char* n : {"status", "iterations", "kkt_norm", "projection_seconds"}) header.emplace_back(n);
  csv::Table out(header);
  int nonconverged = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto& r = results[static_cast<std::size_t>(i)];
    nonconverged += !r.converged();
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < x.cols(); ++j) row.push_back(csv::format_17g(x(i, j)));
    const Eigen::VectorXd base = denormalize(Eigen::VectorXd(pred.row(i).transpose()), model.output_transform);
    const Eigen::VectorXd proj = denormalize(r.projected, model.output_transform);
    for (Eigen::Index j = 0; j < base.size(); ++j) row.push_back(csv::format_17g(base(j)));
    for (Eigen::Index j = 0; j < proj.size(); ++j) row.push_back(r.converged() ? csv::format_17g(proj(j)) : "nan");
    row.push_back(to_string(r.status));
    row.push_back(std::to_string(r.iterations));
    row.push_back(csv::format_shortest(r.kkt_norm));
    row.push_back(csv::format_shortest(r.seconds));
    out.add_row(std::move(row));
  }
  write_manifest(c, c.out_dir);
  out.write(c.out_dir / "projections.csv");
  std::cout << "projected " << x.rows() << " rows, nonconverged " << nonconverged << "\n";
}

void rollout_model(const CommonOptions& o) {
  ExperimentConfig c = resolve(o, ExperimentKind::SpringSingle);
  require(c.system == PhysicalSystem::Spring, "rollout: only the spring-mass system supports rollouts");
  require(!c.io.model_dir.empty(), "rollout: io.model_dir is required");
  const StoredModel model = load_model(c.io.model_dir);
  require(model.system == PhysicalSystem::Spring, "rollout: model is not a spring-mass model");
  write_manifest(c, c.out_dir);
  const auto& s = c.spring;
  const Ensemble& ens = model.ensemble;
  const spring::StepModel step = [&ens](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    return ensemble_predict(ens, z.transpose()).mean.row(0).transpose();
  };
  const spring::RolloutProjection projection{c.projection, s.anchor};
  const auto truth = spring::ground_truth(s.initial, s.steps, s.delta_t, s.substeps, s.params);
  spring::write_trajectory_csv(c.out_dir / "trajectory_ground_truth.csv", truth, s.delta_t);
  const auto free = spring::rollout(step, s.initial, s.steps, model.output_transform, s.params);
  spring::write_trajectory_csv(c.out_dir / "trajectory_model.csv", free, s.delta_t);
  const auto projected = spring::rollout(step, s.initial, s.steps, model.output_transform, s.params, &projection);
  spring::write_trajectory_csv(c.out_dir / "trajectory_projected.csv", projected, s.delta_t);
  std::cout << "rolled out " << s.steps << " steps\n";
}

void run_kind(const std::string& kind_text, const CommonOptions& o) {
  const ExperimentKind kind = parse_experiment_kind(kind_text);
  ExperimentConfig c = load_config(kind, o.config);
  apply_overrides(c, o);
  run_experiment(c);
  std::cout << "experiment " << kind_text << " written to " << c.out_dir.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-consistent projection of neural surrogate predictions"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, project_opts, rollout_opts, exp_opts;
  std::string gen_what, kind;

  auto* gen = app.add_subcommand("gen-data", "generate a training dataset");
  gen->add_option("dataset", gen_what, "spring | ltp-synthetic")->required()->check(CLI::IsMember({"spring", "ltp-synthetic"}));
  add_common(gen, gen_opts);
  auto* train = app.add_subcommand("train", "train the NN (and PINN) and store them");
  add_common(train, train_opts);
  auto* project = app.add_subcommand("project", "predict and project rows of io.inputs with io.model_dir");
  add_common(project, project_opts);
  auto* rollout = app.add_subcommand("rollout", "spring-mass rollout with and without projection");
  add_common(rollout, rollout_opts);
  auto* experiment = app.add_subcommand("experiment", "run one experiment end to end");
  experiment->add_option("kind", kind, "spring-single | spring-many | ltp-compare | ablation-arch | small-samples | timing")
      ->required();
  add_common(experiment, exp_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) gen_data(gen_what, gen_opts);
    else if (*train) train_models(train_opts);
    else if (*project) project_inputs(project_opts);
    else if (*rollout) rollout_model(rollout_opts);
    else if (*experiment) run_kind(kind, exp_opts);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
