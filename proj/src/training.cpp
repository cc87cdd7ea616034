#include "physproj/training.hpp"

#include "physproj/errors.hpp"
#include "physproj/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace physproj {

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()), targets.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(rows[i]);
    out.targets.row(static_cast<Eigen::Index>(i)) = targets.row(rows[i]);
  }
  return out;
}

void TrainConfig::validate() const {
  require(adam.learning_rate > 0.0, "learning rate must be positive");
  require(adam.beta1 > 0.0 && adam.beta1 < 1.0 && adam.beta2 > 0.0 && adam.beta2 < 1.0,
          "adam betas must lie in (0, 1)");
  require(adam.epsilon > 0.0, "adam epsilon must be positive");
  require(max_epochs >= 0, "max_epochs must be non-negative");
  require(batch_size > 0, "batch_size must be positive");
  require(lambda_physics >= 0.0 && lambda_physics <= 1.0, "lambda_physics must lie in [0, 1]");
  if (lambda_split) {
    const auto& s = *lambda_split;
    require(s[0] >= 0.0 && s[1] >= 0.0 && s[2] >= 0.0, "per-law lambdas must be non-negative");
    require(std::abs(s[0] + s[1] + s[2] - lambda_physics) <= 1e-12,
            "per-law lambdas must sum to lambda_physics");
  }
  if (early_stop)
    require(early_stop->alpha > 0.0 && early_stop->strip_length > 0,
            "early stopping needs alpha > 0 and strip_length > 0");
  if (lr_plateau)
    require(lr_plateau->patience >= 1 && lr_plateau->factor > 0.0 && lr_plateau->factor < 1.0,
            "plateau schedule needs patience >= 1 and factor in (0, 1)");
}

double total_loss(double data_loss, double physics_loss, double lambda_physics) {
  require(lambda_physics >= 0.0 && lambda_physics <= 1.0, "lambda_physics must lie in [0, 1]");
  if (lambda_physics == 0.0) return data_loss;
  if (lambda_physics == 1.0) return physics_loss;
  return (1.0 - lambda_physics) * data_loss + lambda_physics * physics_loss;
}

bool pq_alpha_should_stop(const TrainHistory& history, double alpha, int strip_length) {
  require(strip_length > 0, "strip_length must be positive");
  const std::size_t n = history.epochs();
  require_shape(history.val_loss.size() == n, "history: train/validation length mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(history.train_loss[i]) || !std::isfinite(history.val_loss[i]))
      throw TrainingDiverged("non-finite loss in training history");
  const auto k = static_cast<std::size_t>(strip_length);
  if (n < k) return false;

  const double e_opt = *std::min_element(history.val_loss.begin(), history.val_loss.end());
  const double e_va = history.val_loss.back();
  const double generalization_loss = e_opt > 0.0 ? 100.0 * (e_va / e_opt - 1.0) : 0.0;

  const auto strip_begin = history.train_loss.end() - static_cast<std::ptrdiff_t>(k);
  const double strip_sum = std::accumulate(strip_begin, history.train_loss.end(), 0.0);
  const double strip_min = *std::min_element(strip_begin, history.train_loss.end());
  const double progress =
      strip_min > 0.0 ? 1000.0 * (strip_sum / (static_cast<double>(k) * strip_min) - 1.0) : 0.0;
  if (progress <= 0.0) return true;  // training has stalled
  return generalization_loss / progress > alpha;
}

double plateau_lr(const TrainHistory& history, int patience, double factor, double current_lr,
                  double threshold) {
  require(patience >= 1, "patience must be >= 1");
  require(factor > 0.0 && factor < 1.0, "factor must lie in (0, 1)");
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  const std::size_t n = history.val_loss.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (history.val_loss[i] < best * (1.0 - threshold)) {
      best = history.val_loss[i];
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    // A reduction applied after epoch i starts a fresh count.
    if (i + 1 < n && i + 1 < history.learning_rate.size() &&
        history.learning_rate[i + 1] < history.learning_rate[i])
      bad_epochs = 0;
  }
  return bad_epochs >= patience ? current_lr * factor : current_lr;
}

namespace {

struct BatchLoss {
  double total = 0.0;
  double data = 0.0;
  double physics = 0.0;
  Eigen::MatrixXd output_gradient;
};

BatchLoss batch_loss(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                     const Eigen::MatrixXd& targets, double lambda, const PhysicsTerm* physics,
                     bool with_gradient) {
  BatchLoss out;
  out.data = mse(outputs, targets);
  if (with_gradient) out.output_gradient = (1.0 - lambda) * mse_gradient(outputs, targets);
  if (physics) {
    PhysicsEvaluation eval = physics->evaluate(inputs, outputs);
    out.physics = eval.loss;
    if (with_gradient && lambda > 0.0) out.output_gradient += lambda * eval.output_gradient;
  }
  out.total = total_loss(out.data, out.physics, lambda);
  return out;
}

} // namespace

double evaluate_loss(const Network& net, const Dataset& data, double lambda_physics,
                     const PhysicsTerm* physics) {
  const Eigen::MatrixXd outputs = forward(net, data.inputs);
  return batch_loss(data.inputs, outputs, data.targets, lambda_physics, physics, false).total;
}

TrainResult train(const Network& initial, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config, const PhysicsTerm* physics) {
  config.validate();
  TrainResult result{initial, {}};
  if (config.max_epochs == 0) return result;
  require(!train_set.empty(), "train: empty training set");
  require_shape(train_set.inputs.cols() == initial.input_dim() &&
                    train_set.targets.cols() == initial.output_dim(),
                "train: dataset width does not match network");
  const bool has_val = !val_set.empty();
  require(has_val || (!config.early_stop && !config.lr_plateau),
          "train: validation set required for early stopping or plateau scheduling");
  const double lambda = physics ? config.lambda_physics : 0.0;

  Network net = initial;
  Network best = initial;
  auto& history = result.history;
  double best_val = std::numeric_limits<double>::infinity();
  if (has_val) {
    history.initial_val_loss = evaluate_loss(net, val_set, lambda, physics);
    best_val = history.initial_val_loss;
  }

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  AdamState adam;
  AdamOptions adam_options = config.adam;
  ForwardCache cache;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double sum_total = 0.0, sum_data = 0.0, sum_physics = 0.0;
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      const Dataset mini = train_set.subset(rows);
      const Eigen::MatrixXd outputs = forward(net, mini.inputs, &cache);
      BatchLoss loss = batch_loss(mini.inputs, outputs, mini.targets, lambda, physics, true);
      if (!std::isfinite(loss.total)) throw TrainingDiverged("non-finite training loss");
      adam_step(net, backward(net, cache, loss.output_gradient), adam, adam_options);
      const double weight = static_cast<double>(end - begin);
      sum_total += weight * loss.total;
      sum_data += weight * loss.data;
      sum_physics += weight * loss.physics;
    }
    if (!net.all_finite()) throw TrainingDiverged("non-finite parameters after update");
    const double n = static_cast<double>(order.size());
    history.train_loss.push_back(sum_total / n);
    history.data_loss.push_back(sum_data / n);
    history.physics_loss.push_back(sum_physics / n);
    history.learning_rate.push_back(adam_options.learning_rate);
    const double val = has_val ? evaluate_loss(net, val_set, lambda, physics)
                               : history.train_loss.back();
    if (!std::isfinite(val)) throw TrainingDiverged("non-finite validation loss");
    history.val_loss.push_back(val);
    history.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());

    if (has_val && val < best_val) {
      best_val = val;
      best = net;
      history.best_epoch = epoch;
    }
    // checked at the end of each training strip
    if (config.early_stop && history.epochs() % static_cast<std::size_t>(config.early_stop->strip_length) == 0 &&
        pq_alpha_should_stop(history, config.early_stop->alpha, config.early_stop->strip_length)) {
      history.early_stopped = true;
      break;
    }
    if (config.lr_plateau)
      adam_options.learning_rate =
          plateau_lr(history, config.lr_plateau->patience, config.lr_plateau->factor,
                     adam_options.learning_rate, config.lr_plateau->threshold);
  }
  result.network = has_val ? std::move(best) : std::move(net);
  if (!has_val) history.best_epoch = static_cast<int>(history.epochs()) - 1;
  return result;
}

Ensemble ensemble_train(const std::vector<int>& layer_dims, const Dataset& train_set,
                        const Dataset& val_set, const TrainConfig& config, int n_members,
                        const PhysicsTerm* physics, Activation activation,
                        std::vector<TrainHistory>* histories, double leaky_slope) {
  require(n_members >= 1, "ensemble needs at least one member");
  Ensemble ensemble;
  ensemble.members.resize(static_cast<std::size_t>(n_members));
  std::vector<TrainHistory> local(static_cast<std::size_t>(n_members));
  parallel_for(static_cast<std::size_t>(n_members), [&](std::size_t i) {
    TrainConfig member = config;
    member.seed = config.seed + i;
    Network init = xavier_init(layer_dims, activation, member.seed, leaky_slope);
    TrainResult r = train(init, train_set, val_set, member, physics);
    ensemble.members[i] = std::move(r.network);
    local[i] = std::move(r.history);
  });
  if (histories) *histories = std::move(local);
  return ensemble;
}

EnsemblePrediction ensemble_predict(const Ensemble& ensemble, const Eigen::MatrixXd& inputs) {
  require(!ensemble.members.empty(), "ensemble_predict: empty ensemble");
  std::vector<Eigen::MatrixXd> outputs;
  outputs.reserve(ensemble.members.size());
  for (const auto& member : ensemble.members) outputs.push_back(forward(member, inputs));
  const double n = static_cast<double>(outputs.size());
  EnsemblePrediction out;
  out.mean = Eigen::MatrixXd::Zero(outputs.front().rows(), outputs.front().cols());
  for (const auto& y : outputs) out.mean += y;
  out.mean /= n;
  out.stddev = Eigen::MatrixXd::Zero(out.mean.rows(), out.mean.cols());
  for (const auto& y : outputs) out.stddev += (y - out.mean).cwiseAbs2();
  out.stddev = (out.stddev / n).cwiseSqrt();
  return out;
}

} // namespace physproj
