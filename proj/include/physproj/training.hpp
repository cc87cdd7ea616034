#pragma once

#include "physproj/network.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace physproj {

/// Paired samples in normalized space, one sample per row.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;

  Eigen::Index size() const { return inputs.rows(); }
  bool empty() const { return inputs.rows() == 0; }
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

struct PhysicsEvaluation {
  double loss = 0.0;
  Eigen::MatrixXd output_gradient;  // d loss / d outputs, same shape as outputs
};

/// Physics regularizer for loss-based PINN training. `evaluate` returns the
/// physics loss L_physics on a normalized batch; training combines it as
/// (1 - lambda) * L_data + lambda * L_physics.
class PhysicsTerm {
public:
  virtual ~PhysicsTerm() = default;
  virtual PhysicsEvaluation evaluate(const Eigen::MatrixXd& inputs,
                                     const Eigen::MatrixXd& outputs) const = 0;
};

struct EarlyStopping {
  double alpha = 2.0;
  int strip_length = 5;
};

struct PlateauSchedule {
  int patience = 10;
  double factor = 0.1;
  double threshold = 1e-4;  // relative improvement that resets the counter
};

struct TrainConfig {
  AdamOptions adam;
  int max_epochs = 60;
  int batch_size = 64;
  double lambda_physics = 0.0;
  /// Per-law weights (pressure, current, quasi-neutrality); must sum to
  /// lambda_physics when present.
  std::optional<std::array<double, 3>> lambda_split;
  std::optional<EarlyStopping> early_stop;
  std::optional<PlateauSchedule> lr_plateau;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> physics_loss;
  std::vector<double> data_loss;
  std::vector<double> learning_rate;
  std::vector<double> epoch_seconds;
  double initial_val_loss = 0.0;
  int best_epoch = -1;  // -1: the initial parameters were best
  bool early_stopped = false;

  std::size_t epochs() const { return train_loss.size(); }
};

/// (1 - lambda) * data + lambda * physics; lambda must lie in [0, 1].
double total_loss(double data_loss, double physics_loss, double lambda_physics);

/// Prechelt's PQ_alpha criterion on the last `strip_length` epochs.
bool pq_alpha_should_stop(const TrainHistory& history, double alpha, int strip_length);

/// Returns current_lr * factor when the validation loss has not improved by
/// more than `threshold` (relative) for `patience` epochs since the last
/// improvement or the last reduction, else current_lr.
double plateau_lr(const TrainHistory& history, int patience, double factor, double current_lr,
                  double threshold = 1e-4);

struct TrainResult {
  Network network;
  TrainHistory history;
};

/// Adam training with optional physics regularization. Returns the
/// parameters of the epoch with the lowest validation loss (or the last epoch
/// when no validation set is given).
TrainResult train(const Network& initial, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config, const PhysicsTerm* physics = nullptr);

/// Total (data + physics) loss of a network on a dataset.
double evaluate_loss(const Network& net, const Dataset& data, double lambda_physics,
                     const PhysicsTerm* physics = nullptr);

struct Ensemble {
  std::vector<Network> members;
  std::string transform_ref;
};

/// Member i is initialized and shuffled with seed config.seed + i.
Ensemble ensemble_train(const std::vector<int>& layer_dims, const Dataset& train_set,
                        const Dataset& val_set, const TrainConfig& config, int n_members,
                        const PhysicsTerm* physics = nullptr,
                        Activation activation = Activation::LeakyReLU,
                        std::vector<TrainHistory>* histories = nullptr,
                        double leaky_slope = 0.01);

struct EnsemblePrediction {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd stddev;  // population standard deviation
};

EnsemblePrediction ensemble_predict(const Ensemble& ensemble, const Eigen::MatrixXd& inputs);

} // namespace physproj
