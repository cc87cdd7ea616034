#include "fd.hpp"
#include "physproj/errors.hpp"
#include "physproj/network.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace physproj;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

double loss_of(const Network& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t) {
  return mse(forward(net, x), t);
}

} // namespace

TEST_CASE("parameter count of a dense architecture") {
  CHECK(parameter_count({3, 50, 50, 17}) == 3 * 50 + 50 + 50 * 50 + 50 + 50 * 17 + 17);
  CHECK(xavier_init({4, 22, 98, 9, 4}, Activation::LeakyReLU, 1).parameter_count() ==
        parameter_count({4, 22, 98, 9, 4}));
}

TEST_CASE("xavier init respects the glorot bound and is seeded") {
  const Network a = xavier_init({10, 30, 5}, Activation::LeakyReLU, 42);
  const Network b = xavier_init({10, 30, 5}, Activation::LeakyReLU, 42);
  const Network c = xavier_init({10, 30, 5}, Activation::LeakyReLU, 43);
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 40.0));
  CHECK(a.weights[1].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 35.0));
  CHECK(a.biases[0].isZero());
  CHECK(a.weights[0] == b.weights[0]);
  CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("forward pass matches a hand computation") {
  Network net = xavier_init({2, 2, 1}, Activation::LeakyReLU, 1, 0.1);
  net.weights[0] << 1.0, -1.0,
                    2.0, 0.5;
  net.biases[0] << 0.0, -3.0;
  net.weights[1] << 1.0, 2.0;
  net.biases[1] << 0.5;
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  // hidden: (1 - 2, 2 + 1 - 3) = (-1, 0) -> leaky (-0.1, 0)
  CHECK(forward_one(net, x)(0) == doctest::Approx(-0.1 + 0.0 + 0.5));
}

TEST_CASE("backprop agrees with finite differences") {
  for (Activation act : {Activation::LeakyReLU, Activation::Identity}) {
    Network net = xavier_init({3, 7, 6, 2}, act, 5);
    for (std::size_t l = 0; l < net.num_layers(); ++l)
      net.biases[l] = random_matrix(net.biases[l].size(), 1, 100 + l).col(0) * 0.3;
    const Eigen::MatrixXd x = random_matrix(9, 3, 6);
    const Eigen::MatrixXd t = random_matrix(9, 2, 7);
    ForwardCache cache;
    const Eigen::MatrixXd out = forward(net, x, &cache);
    const Gradients g = backward(net, cache, mse_gradient(out, t));

    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      Eigen::MatrixXd fd_w(net.weights[l].rows(), net.weights[l].cols());
      for (Eigen::Index i = 0; i < fd_w.rows(); ++i)
        for (Eigen::Index j = 0; j < fd_w.cols(); ++j) {
          Network p = net, m = net;
          const double h = 1e-6;
          p.weights[l](i, j) += h;
          m.weights[l](i, j) -= h;
          fd_w(i, j) = (loss_of(p, x, t) - loss_of(m, x, t)) / (2 * h);
        }
      Eigen::VectorXd fd_b(net.biases[l].size());
      for (Eigen::Index i = 0; i < fd_b.size(); ++i) {
        Network p = net, m = net;
        const double h = 1e-6;
        p.biases[l](i) += h;
        m.biases[l](i) -= h;
        fd_b(i) = (loss_of(p, x, t) - loss_of(m, x, t)) / (2 * h);
      }
      CHECK(fd::relative_error(g.weights[l], fd_w) < 1e-5);
      CHECK(fd::relative_error(g.biases[l], fd_b) < 1e-5);
    }
  }
}

TEST_CASE("first Adam step moves each parameter by lr * sign(g)") {
  Network net = xavier_init({2, 3, 1}, Activation::LeakyReLU, 9);
  const Network before = net;
  Gradients g;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    g.weights.push_back(random_matrix(net.weights[l].rows(), net.weights[l].cols(), 20 + l));
    g.biases.push_back(random_matrix(net.biases[l].size(), 1, 30 + l).col(0));
  }
  AdamState state;
  AdamOptions opt;
  opt.learning_rate = 0.01;
  adam_step(net, g, state, opt);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Eigen::MatrixXd expected =
        before.weights[l].array() - opt.learning_rate * g.weights[l].array() / (g.weights[l].array().abs() + opt.epsilon);
    CHECK((net.weights[l] - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK(state.step == 1);
}

TEST_CASE("Adam refuses non-finite gradients") {
  Network net = xavier_init({2, 2, 1}, Activation::LeakyReLU, 1);
  const Network before = net;
  Gradients g;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  g.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState state;
  CHECK_THROWS_AS(adam_step(net, g, state, {}), TrainingDiverged);
  CHECK(net.weights[0] == before.weights[0]);
}

TEST_CASE("network serialization round-trips bit for bit") {
  Network net = xavier_init({3, 4, 2}, Activation::LeakyReLU, 3, 0.02);
  net.transform_ref = "output_transform.txt";
  std::stringstream ss;
  write_network(ss, net);
  const Network back = read_network(ss);
  CHECK(back.layer_dims == net.layer_dims);
  CHECK(back.leaky_slope == net.leaky_slope);
  CHECK(back.transform_ref == net.transform_ref);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    CHECK(back.weights[l] == net.weights[l]);
    CHECK(back.biases[l] == net.biases[l]);
  }
}

TEST_CASE("forward rejects inputs of the wrong width") {
  const Network net = xavier_init({3, 4, 2}, Activation::LeakyReLU, 3);
  CHECK_THROWS_AS(forward(net, Eigen::MatrixXd::Zero(2, 4)), ShapeError);
}
