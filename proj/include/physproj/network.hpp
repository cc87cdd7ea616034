#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace physproj {

enum class Activation { LeakyReLU, Identity };

/// Dense feed-forward network. Hidden layers use `activation`; the output
/// layer is always affine. Batches are laid out one sample per row.
struct Network {
  std::vector<int> layer_dims;
  std::vector<Eigen::MatrixXd> weights;  // layer l: layer_dims[l+1] x layer_dims[l]
  std::vector<Eigen::VectorXd> biases;   // layer l: layer_dims[l+1]
  Activation activation = Activation::LeakyReLU;
  double leaky_slope = 0.01;
  /// Free-form pointer to the transform the network was trained against
  /// (usually a file name); carried through serialization only.
  std::string transform_ref;

  std::size_t num_layers() const { return weights.size(); }
  Eigen::Index input_dim() const { return layer_dims.front(); }
  Eigen::Index output_dim() const { return layer_dims.back(); }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Parameter count of a dense architecture: sum of fan_in*fan_out + fan_out.
std::size_t parameter_count(const std::vector<int>& layer_dims);

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
Network xavier_init(const std::vector<int>& layer_dims, Activation activation,
                    std::uint64_t seed, double leaky_slope = 0.01);

/// Per-layer values kept by forward() for backward().
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;       // input to layer l (A_{l-1})
  std::vector<Eigen::MatrixXd> preactivations;  // Z_l
  bool empty() const { return inputs.empty(); }
};

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& inputs,
                        ForwardCache* cache = nullptr);
Eigen::VectorXd forward_one(const Network& net, const Eigen::VectorXd& input);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  double max_abs() const;
  bool all_finite() const;
};

/// Gradients of a scalar loss given dLoss/dOutput for the cached batch.
Gradients backward(const Network& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_gradient);

/// Mean over all elements of squared differences.
double mse(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);
/// d mse / d prediction.
Eigen::MatrixXd mse_gradient(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  long step = 0;
};

/// One bias-corrected Adam update. Throws TrainingDiverged on non-finite
/// gradients (parameters are left untouched in that case).
void adam_step(Network& net, const Gradients& grads, AdamState& state,
               const AdamOptions& options);

inline constexpr const char* kNetworkMagic = "PHYSPROJ-NET-v1";

void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

} // namespace physproj
