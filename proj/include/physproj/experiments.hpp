#pragma once

#include "physproj/config.hpp"
#include "physproj/ltp.hpp"
#include "physproj/metrics.hpp"
#include "physproj/training.hpp"
#include "physproj/transform.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace physproj {

/// The four compared models, in report order.
inline const std::array<std::string, 4>& model_names() {
  static const std::array<std::string, 4> names{"nn", "pinn", "nn_projected", "pinn_projected"};
  return names;
}

struct ModelMetrics {
  std::string model;
  Eigen::VectorXd rmse;  // per output, normalized units
  double energy_rmse = std::numeric_limits<double>::quiet_NaN();  // J, spring-mass only
  Eigen::Vector3d compliance = Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN());
  int nonconverged = 0;
};

struct MetricsReport {
  std::vector<std::string> output_names;
  std::vector<ModelMetrics> models;
  /// NN -> projected NN and PINN -> projected PINN (spring-mass, many ICs).
  std::vector<std::pair<std::string, ImprovementRates>> rates;
  std::vector<std::pair<std::string, double>> phase_seconds;

  const ModelMetrics& model(const std::string& name) const;
  bool has_model(const std::string& name) const;
  int total_nonconverged() const;
};

/// Records wall-clock phases and writes them as phase,wall_seconds.
class PhaseTimer {
public:
  void start(std::string phase);
  void stop();
  const std::vector<std::pair<std::string, double>>& phases() const { return phases_; }
  void write(const std::filesystem::path& path) const;

private:
  std::string current_;
  double started_ = 0.0;
  std::vector<std::pair<std::string, double>> phases_;
};

/// Column names that hold wall-clock values (excluded from determinism
/// comparisons): suffix "_seconds" or "_wallclock_pct".
bool is_wallclock_column(const std::string& name);

void write_manifest(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Compares every CSV under two output directories cell by cell, skipping
/// wall-clock columns. Returns one line per difference; empty when equal.
std::vector<std::string> compare_csv_outputs(const std::filesystem::path& a, const std::filesystem::path& b);

// --- datasets ------------------------------------------------------------

struct SplitData {
  Dataset train, validation, test;
};

/// Seeded shuffle then contiguous split into train / validation / test.
SplitData split_dataset(const Dataset& data, const std::array<double, 3>& fractions, std::uint64_t seed);

struct SpringData {
  std::vector<spring::TransitionSample> samples;
  Eigen::MatrixXd inputs, targets;  // physical
  SplitIndices split;
  TransformSpec transform;          // shared by inputs and targets
  SplitData normalized;
};

SpringData prepare_spring_data(const ExperimentConfig& config);

struct LtpPrepared {
  ltp::LtpData data;  // physical
  SplitIndices split;
  TransformSpec input_transform, output_transform;
  SplitData normalized;
};

ltp::LtpData load_or_generate_ltp(const ExperimentConfig& config, int n, std::uint64_t seed);

/// Fits the transforms on `rows_train` and normalizes every row.
LtpPrepared prepare_ltp(const ltp::LtpData& data, const SplitIndices& split, const ExperimentConfig& config);

ltp::LtpOptions ltp_options(const ExperimentConfig& config);

// --- models --------------------------------------------------------------

/// Trained model plus the transforms it expects, as stored by `train`.
struct StoredModel {
  PhysicalSystem system = PhysicalSystem::Spring;
  Ensemble ensemble;
  TransformSpec input_transform, output_transform;
};

void save_model(const std::filesystem::path& dir, const StoredModel& model);
StoredModel load_model(const std::filesystem::path& dir);

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

// --- experiments ---------------------------------------------------------

MetricsReport run_spring_single(const ExperimentConfig& config);
MetricsReport run_spring_many(const ExperimentConfig& config);
MetricsReport run_ltp_compare(const ExperimentConfig& config);

struct ArchitectureRow {
  std::vector<int> hidden;
  long long parameters = 0;
  double rmse_all_nn = 0.0, rmse_all_projected = 0.0, variation_all = 0.0;
  double rmse_focus_nn = 0.0, rmse_focus_projected = 0.0, variation_focus = 0.0;
  int nonconverged = 0;
  std::string error;  // empty on success
  double training_seconds = 0.0;
};

std::vector<ArchitectureRow> run_ablation_arch(const ExperimentConfig& config);

struct SmallSampleRow {
  int size = 0;
  int resamples = 0;
  double rmse_focus_nn = 0.0, rmse_focus_projected = 0.0, variation_focus = 0.0;
  double rmse_all_nn = 0.0, rmse_all_projected = 0.0, variation_all = 0.0;
  int nonconverged = 0;
  int failed_runs = 0;
};

std::vector<SmallSampleRow> run_small_samples(const ExperimentConfig& config);

struct TimingRow {
  int size = 0;
  double rmse_focus_nn = 0.0, rmse_focus_projected = 0.0;
  int nonconverged = 0;
  double data_seconds = 0.0, training_seconds = 0.0, inference_seconds = 0.0, projection_seconds = 0.0;
  double total_seconds() const { return data_seconds + training_seconds + inference_seconds + projection_seconds; }
  double overhead_pct() const { return 100.0 * projection_seconds / total_seconds(); }
};

std::vector<TimingRow> run_timing(const ExperimentConfig& config);

/// Runs the experiment selected by config.kind and writes its outputs.
void run_experiment(const ExperimentConfig& config);

} // namespace physproj
