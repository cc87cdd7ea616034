#pragma once

#include "physproj/network.hpp"
#include "physproj/projector.hpp"
#include "physproj/spring_params.hpp"
#include "physproj/springmass.hpp"
#include "physproj/training.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace physproj {

enum class ExperimentKind { SpringSingle, SpringMany, LtpCompare, AblationArch, SmallSamples, Timing };

/// "spring-single", "spring-many", "ltp-compare", "ablation-arch",
/// "small-samples", "timing".
std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

enum class PhysicalSystem { Spring, Ltp };

std::string to_string(PhysicalSystem system);
PhysicalSystem system_of(ExperimentKind kind);

struct SpringSettings {
  spring::SpringParams params;
  int samples = 20000;
  double delta_t = 0.05;
  int substeps = 50;
  double e_max = 5.0;
  spring::State initial = spring::reference_initial_state();
  int steps = 165;
  int trajectories = 100;
  spring::EnergyAnchor anchor = spring::EnergyAnchor::Initial;
};

struct LtpSettings {
  int samples = 1000;
  std::string dataset;         // CSV path; empty means synthetic
  std::string column_mapping;  // optional mapping file for `dataset`
  double skew_threshold = 2.0;
  bool electrons_in_pressure = false;
  double electron_scale_floor = 1e6;
  double pinn_electron_scale_floor = 1e15;
};

struct ModelSettings {
  std::vector<int> hidden{22, 98, 9};
  Activation activation = Activation::LeakyReLU;
  double leaky_slope = 0.01;
  int ensemble_members = 1;
  bool train_pinn = true;
  double pinn_lambda = 0.005;
  std::optional<std::array<double, 3>> pinn_lambda_split;
};

struct SweepSettings {
  std::vector<std::vector<int>> architectures;
  std::vector<int> sizes;
  int resamples = 20;
  int pool_size = 3000;
  int test_size = 500;
  double validation_fraction = 0.1;
  int trend_points = 50;
  double trend_current = 0.03;      // A
  double trend_radius = 0.012;      // m
  double trend_pressure_min = 0.1;  // Torr
  double trend_pressure_max = 10.0; // Torr
};

/// Paths used by the train / project / rollout subcommands.
struct IoSettings {
  std::string data;      // dataset CSV for `train`
  std::string model_dir; // trained model directory
  std::string inputs;    // CSV of inputs for `project`
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SpringSingle;
  PhysicalSystem system = PhysicalSystem::Spring;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  std::array<double, 3> fractions{0.8, 0.1, 0.1};
  int threads = 0;  // 0: hardware concurrency

  SpringSettings spring;
  LtpSettings ltp;
  ModelSettings model;
  TrainConfig train;
  ProjectionSpec projection;
  SweepSettings sweep;
  IoSettings io;

  std::vector<int> layer_dims() const;
  /// Training settings for the physics-regularized model.
  TrainConfig pinn_train() const;
  void validate() const;
};

/// Defaults for an experiment kind (spring kinds follow the spring-mass
/// study, the others the plasma study).
ExperimentConfig default_config(ExperimentKind kind);

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; `#` starts a comment. Duplicate keys are an
/// error.
ConfigEntries parse_config_text(const std::string& text);

/// Applies entries on top of `config`. Unknown keys are an error. The keys
/// `kind` and `system` are applied first.
void apply_config(ExperimentConfig& config, const ConfigEntries& entries);

/// Defaults for `kind` overlaid with the file at `path` (when non-empty).
ExperimentConfig load_config(ExperimentKind kind, const std::filesystem::path& path);

/// Reads the file once to find `kind` or `system`, then defaults for that
/// kind overlaid with the file. `fallback` is used when neither is given.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind fallback);

/// Every key with its resolved value, one `key = value` per line, in a fixed
/// order. Feeding the text back through apply_config reproduces the config.
std::string manifest_text(const ExperimentConfig& config);

/// All recognised keys in manifest order.
std::vector<std::string> config_keys();

} // namespace physproj
