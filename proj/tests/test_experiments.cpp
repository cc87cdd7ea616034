#include "physproj/csv.hpp"
#include "physproj/errors.hpp"
#include "physproj/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace physproj;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "physproj_experiment_tests" / name;
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny(ExperimentKind kind, const fs::path& out) {
  ExperimentConfig c = default_config(kind);
  if (c.system == PhysicalSystem::Spring) {
    apply_config(c, {{"spring.samples", "1000"}, {"train.max_epochs", "3"}, {"spring.steps", "12"},
                     {"spring.trajectories", "6"}, {"model.hidden", "16,16"}});
  } else {
    apply_config(c, {{"ltp.samples", "200"}, {"train.max_epochs", "20"}, {"model.hidden", "12,12"},
                     {"model.ensemble_members", "2"}, {"sweep.architectures", "2,2; 8"},
                     {"sweep.sizes", "20,40"}, {"sweep.resamples", "2"}, {"sweep.pool_size", "300"},
                     {"sweep.test_size", "60"}, {"trend.points", "5"}});
  }
  c.out_dir = out;
  return c;
}

int csv_rows(const fs::path& p) {
  std::ifstream in(p);
  int lines = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++lines;
  return lines - 1;
}

} // namespace

TEST_CASE("wall-clock columns are recognised by suffix") {
  CHECK(is_wallclock_column("wall_seconds"));
  CHECK(is_wallclock_column("projection_overhead_wallclock_pct"));
  CHECK_FALSE(is_wallclock_column("rmse_focus_nn"));
  CHECK_FALSE(is_wallclock_column("seconds_total"));
}

TEST_CASE("spring single-trajectory experiment writes its outputs") {
  const fs::path out = scratch("spring_single");
  const MetricsReport r = run_spring_single(tiny(ExperimentKind::SpringSingle, out));
  REQUIRE(r.models.size() == 4);
  CHECK(r.models[0].model == "nn");
  CHECK(r.models[3].model == "pinn_projected");
  for (const char* f : {"summary.csv", "trajectory_ground_truth.csv", "trajectory_nn_projected.csv",
                        "projection_nn_projected.csv", "history_nn.csv", "phase_times.csv", "manifest.txt"})
    CHECK(fs::exists(out / f));
  CHECK(csv_rows(out / "trajectory_nn.csv") == 13);
  // the projected energy stays on the initial shell within the tolerance band
  CHECK(r.model("nn_projected").energy_rmse < r.model("nn").energy_rmse);
}

TEST_CASE("spring many-trajectory experiment reports improvement rates") {
  const fs::path out = scratch("spring_many");
  const MetricsReport r = run_spring_many(tiny(ExperimentKind::SpringMany, out));
  REQUIRE(r.rates.size() == 2);
  CHECK(r.rates[0].first == "nn->nn_projected");
  CHECK(r.rates[0].second.r_mean >= r.rates[0].second.r_all);
  CHECK(fs::exists(out / "trajectory_rmse.csv"));
  CHECK(fs::exists(out / "improvement_rates.csv"));
}

TEST_CASE("plasma comparison projects onto the laws") {
  const fs::path out = scratch("ltp_compare");
  const MetricsReport r = run_ltp_compare(tiny(ExperimentKind::LtpCompare, out));
  const ModelMetrics& nn = r.model("nn");
  const ModelMetrics& proj = r.model("nn_projected");
  CHECK(proj.nonconverged == 0);
  CHECK(proj.compliance.maxCoeff() <= 1e-7);
  CHECK(nn.compliance.maxCoeff() > proj.compliance.maxCoeff());
  CHECK(csv_rows(out / "per_output_rmse_physical.csv") == 17);
  CHECK(fs::exists(out / "model_nn" / "member_1.net"));
}

TEST_CASE("architecture ablation and small-sample sweeps") {
  const fs::path out = scratch("ablation");
  const auto rows = run_ablation_arch(tiny(ExperimentKind::AblationArch, out));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].parameters == static_cast<long long>(parameter_count({3, 8, 17})));
  CHECK(csv_rows(out / "trend_electron_density.csv") == 10);

  const fs::path out2 = scratch("small");
  const auto small = run_small_samples(tiny(ExperimentKind::SmallSamples, out2));
  REQUIRE(small.size() == 2);
  CHECK(small[0].resamples + small[0].failed_runs == 2);
  CHECK(csv_rows(out2 / "runs.csv") == 4);
}

TEST_CASE("outputs are reproducible apart from wall-clock columns") {
  const fs::path ta = scratch("timing_a");
  ExperimentConfig c = tiny(ExperimentKind::Timing, ta);
  apply_config(c, {{"sweep.sizes", "20"}});
  run_experiment(c);
  c.out_dir = scratch("timing_b");
  run_experiment(c);
  CHECK(compare_csv_outputs(ta, c.out_dir).empty());

  const fs::path a = scratch("det_a"), b = scratch("det_b");
  run_experiment(tiny(ExperimentKind::SpringSingle, a));
  run_experiment(tiny(ExperimentKind::SpringSingle, b));
  CHECK(compare_csv_outputs(a, b).empty());

  // a different seed must change something
  ExperimentConfig other = tiny(ExperimentKind::SpringSingle, scratch("det_c"));
  other.seed = 2;
  run_experiment(other);
  CHECK_FALSE(compare_csv_outputs(a, other.out_dir).empty());
}

TEST_CASE("stored models round-trip") {
  const fs::path out = scratch("model_store");
  StoredModel m;
  m.system = PhysicalSystem::Spring;
  m.ensemble.members = {xavier_init({4, 6, 4}, Activation::LeakyReLU, 1), xavier_init({4, 6, 4}, Activation::LeakyReLU, 2)};
  m.input_transform = m.output_transform =
      TransformSpec({{"x1", -1, 1, false}, {"v1", -2, 2, false}, {"x2", 0, 3, false}, {"v2", -2, 2, false}});
  save_model(out, m);
  const StoredModel back = load_model(out);
  CHECK(back.ensemble.members.size() == 2);
  CHECK(back.ensemble.members[1].weights[0] == m.ensemble.members[1].weights[0]);
  CHECK(back.output_transform == m.output_transform);

  std::ofstream(out / "model.txt") << "system = ltp\nmembers = 2\n";
  CHECK_THROWS_AS(load_model(out), ShapeError);
}
