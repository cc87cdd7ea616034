#include "physproj/network.hpp"

#include "physproj/csv.hpp"
#include "physproj/errors.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

namespace physproj {

std::size_t parameter_count(const std::vector<int>& layer_dims) {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l)
    count += static_cast<std::size_t>(layer_dims[l]) * static_cast<std::size_t>(layer_dims[l + 1]) +
             static_cast<std::size_t>(layer_dims[l + 1]);
  return count;
}

std::size_t Network::parameter_count() const { return physproj::parameter_count(layer_dims); }

bool Network::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

Network xavier_init(const std::vector<int>& layer_dims, Activation activation,
                    std::uint64_t seed, double leaky_slope) {
  if (layer_dims.size() < 2)
    throw ValidationError("invalid architecture: need at least input and output widths");
  for (int d : layer_dims)
    if (d <= 0) throw ValidationError("invalid architecture: non-positive layer width");

  Network net;
  net.layer_dims = layer_dims;
  net.activation = activation;
  net.leaky_slope = leaky_slope;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(fan_out, fan_in);
    // Row-major fill so the draw order matches the serialized layout.
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = dist(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

namespace {

void activate(Eigen::MatrixXd& z, const Network& net) {
  if (net.activation == Activation::Identity) return;
  const double slope = net.leaky_slope;
  z = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

Eigen::MatrixXd affine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  Eigen::MatrixXd z = a * w.transpose();
  z.rowwise() += b.transpose();
  return z;
}

} // namespace

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& inputs, ForwardCache* cache) {
  require_shape(!net.weights.empty(), "forward: empty network");
  require_shape(inputs.cols() == net.input_dim(),
                "forward: input width " + std::to_string(inputs.cols()) + " != " +
                    std::to_string(net.input_dim()));
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  Eigen::MatrixXd a = inputs;
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd z = affine(a, net.weights[l], net.biases[l]);
    if (cache) {
      cache->inputs.push_back(a);
      cache->preactivations.push_back(z);
    }
    if (l != last) activate(z, net);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd forward_one(const Network& net, const Eigen::VectorXd& input) {
  Eigen::MatrixXd batch = input.transpose();
  return forward(net, batch).row(0).transpose();
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights) m = std::max(m, w.cwiseAbs().maxCoeff());
  for (const auto& b : biases) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

bool Gradients::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

Gradients backward(const Network& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_gradient) {
  if (cache.empty() || cache.inputs.size() != net.num_layers())
    throw ValidationError("backward: missing or stale forward cache");
  const Eigen::Index batch = cache.inputs.front().rows();
  require_shape(output_gradient.rows() == batch && output_gradient.cols() == net.output_dim(),
                "backward: output gradient shape does not match cached batch");
  for (std::size_t l = 0; l < net.num_layers(); ++l)
    if (cache.inputs[l].cols() != net.weights[l].cols() ||
        cache.preactivations[l].cols() != net.weights[l].rows())
      throw ValidationError("backward: missing or stale forward cache");

  Gradients grads;
  grads.weights.resize(net.num_layers());
  grads.biases.resize(net.num_layers());
  Eigen::MatrixXd delta = output_gradient;
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    if (l + 1 != net.num_layers() && net.activation == Activation::LeakyReLU) {
      const double slope = net.leaky_slope;
      delta.array() *= cache.preactivations[l].unaryExpr(
          [slope](double v) { return v > 0.0 ? 1.0 : slope; }).array();
    }
    grads.weights[l] = delta.transpose() * cache.inputs[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * net.weights[l];
  }
  return grads;
}

double mse(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  require_shape(prediction.rows() == target.rows() && prediction.cols() == target.cols(),
                "mse: shape mismatch");
  require_shape(prediction.size() > 0, "mse: empty batch");
  return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

Eigen::MatrixXd mse_gradient(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  require_shape(prediction.rows() == target.rows() && prediction.cols() == target.cols(),
                "mse: shape mismatch");
  return 2.0 * (prediction - target) / static_cast<double>(prediction.size());
}

void adam_step(Network& net, const Gradients& grads, AdamState& state,
               const AdamOptions& options) {
  require_shape(grads.weights.size() == net.num_layers() && grads.biases.size() == net.num_layers(),
                "adam: gradient layer count mismatch");
  if (!grads.all_finite()) throw TrainingDiverged("non-finite gradient");
  if (state.m_weights.empty()) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      state.m_weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
      state.v_weights.push_back(state.m_weights.back());
      state.m_biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
      state.v_biases.push_back(state.m_biases.back());
    }
  }
  ++state.step;
  const double b1 = options.beta1, b2 = options.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = options.learning_rate, eps = options.epsilon;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    require_shape(param.rows() == grad.rows() && param.cols() == grad.cols(),
                  "adam: gradient shape mismatch");
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseAbs2();
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    update(net.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l]);
    update(net.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l]);
  }
}

void write_network(std::ostream& out, const Network& net) {
  out << kNetworkMagic << '\n';
  out << "activation "
      << (net.activation == Activation::LeakyReLU ? "leaky_relu" : "identity") << ' '
      << csv::format_17g(net.leaky_slope) << '\n';
  out << "layers " << net.layer_dims.size();
  for (int d : net.layer_dims) out << ' ' << d;
  out << '\n';
  out << "transform " << (net.transform_ref.empty() ? "-" : net.transform_ref) << '\n';
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& w = net.weights[l];
    out << "weights " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) out << (c ? " " : "") << csv::format_17g(w(r, c));
      out << '\n';
    }
    const auto& b = net.biases[l];
    out << "biases " << l << ' ' << b.size() << '\n';
    for (Eigen::Index i = 0; i < b.size(); ++i) out << (i ? " " : "") << csv::format_17g(b(i));
    out << '\n';
  }
  out << "end\n";
}

Network read_network(std::istream& in) {
  auto expect = [&](const std::string& keyword) {
    std::string word;
    in >> word;
    require(word == keyword, "network file: expected '" + keyword + "', got '" + word + "'");
  };
  std::string magic;
  in >> magic;
  require(magic == kNetworkMagic, "not a network file (bad magic '" + magic + "')");
  Network net;
  expect("activation");
  std::string act;
  in >> act >> net.leaky_slope;
  if (act == "leaky_relu") net.activation = Activation::LeakyReLU;
  else if (act == "identity") net.activation = Activation::Identity;
  else throw ValidationError("network file: unknown activation " + act);
  expect("layers");
  std::size_t n = 0;
  in >> n;
  require(n >= 2 && n < 1000, "network file: bad layer count");
  net.layer_dims.resize(n);
  for (auto& d : net.layer_dims) {
    in >> d;
    require(d > 0, "network file: non-positive layer width");
  }
  expect("transform");
  in >> net.transform_ref;
  if (net.transform_ref == "-") net.transform_ref.clear();
  for (std::size_t l = 0; l + 1 < n; ++l) {
    expect("weights");
    std::size_t index = 0;
    Eigen::Index rows = 0, cols = 0;
    in >> index >> rows >> cols;
    require(index == l && rows == net.layer_dims[l + 1] && cols == net.layer_dims[l],
            "network file: weight block header mismatch");
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) in >> w(r, c);
    expect("biases");
    Eigen::Index len = 0;
    in >> index >> len;
    require(index == l && len == rows, "network file: bias block header mismatch");
    Eigen::VectorXd b(len);
    for (Eigen::Index i = 0; i < len; ++i) in >> b(i);
    require(static_cast<bool>(in), "network file: truncated");
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  expect("end");
  return net;
}

void save_network(const std::string& path, const Network& net) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  write_network(out, net);
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_network(in);
}

} // namespace physproj
