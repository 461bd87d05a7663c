#include "tds/nets.hpp"
#include "tds/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tds;

TEST(Activation, Values) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(sigmoid(800.0), 1.0);
  EXPECT_DOUBLE_EQ(Activation::relu()(-2.0), 0.0);
  EXPECT_DOUBLE_EQ(Activation::relu()(2.0), 2.0);
  EXPECT_DOUBLE_EQ(Activation::sigmoid().lipschitz(), 0.25);
  EXPECT_NEAR(Activation::custom(0.5)(1.0), 0.5 * std::tanh(1.0), 1e-15);
  EXPECT_THROW(Activation::custom(-1.0), ContractError);
}

TEST(NeuralNet, HandComputedForwardPass) {
  Matrix W1(2, 2), W2(1, 2);
  W1 << 1, 0, 0, -1;
  W2 << 2, -1;
  NeuralNet net({W1, W2}, Activation::relu());
  Vector x(2);
  x << 3, 4;
  // relu(3) = 3, relu(-4) = 0.
  EXPECT_DOUBLE_EQ(net(x), 6.0);
  NeuralNet sig({W1, W2}, Activation::sigmoid());
  EXPECT_NEAR(sig(x), 2 * sigmoid(3) - sigmoid(-4), 1e-15);
}

TEST(NeuralNet, ShapeValidation) {
  EXPECT_THROW(NeuralNet({Matrix::Ones(2, 3), Matrix::Ones(1, 3)}, Activation::relu()), ContractError);
  EXPECT_THROW(NeuralNet({Matrix::Ones(2, 3), Matrix::Ones(2, 2)}, Activation::relu()), ContractError);
  EXPECT_THROW(NeuralNet({}, Activation::relu()), ContractError);
  NeuralNet ok({Matrix::Ones(2, 3), Matrix::Ones(1, 2)}, Activation::relu());
  EXPECT_THROW(ok(Vector::Ones(2)), ContractError);
}

TEST(NetNorms, HandComputed) {
  Matrix W1(2, 2), W2(2, 2), W3(1, 2);
  W1 << 3, 4, 1, 0;
  W2 << 1, -1, 0.5, 0;
  W3 << -2, 1;
  NeuralNet net({W1, W2, W3}, Activation::sigmoid());
  NetNorms n = net_norms(net);
  EXPECT_DOUBLE_EQ(n.w1_two_inf, 5.0);
  EXPECT_DOUBLE_EQ(n.w_sum_l1, 2.5 + 3.0);
  EXPECT_NEAR(n.lipschitz_cert, std::sqrt(2.0) * 5.0 * std::pow(5.5 * 0.25, 2), 1e-12);
}

TEST(NetNorms, CertificateBoundsDifferenceQuotients) {
  Rng rng = substream(9, 0);
  for (int rep = 0; rep < 10; ++rep) {
    std::size_t depth = 2 + rep % 2;
    std::vector<std::size_t> sizes = depth == 2 ? std::vector<std::size_t>{3, 1} : std::vector<std::size_t>{3, 2, 1};
    NeuralNet net = random_net(4, sizes, rep % 2 ? Activation::relu() : Activation::sigmoid(), 1.0, 100 + rep);
    double cert = net_norms(net).lipschitz_cert;
    for (int i = 0; i < 500; ++i) {
      Vector x = uniform_ball_point(4, 2.0, rng), y = uniform_ball_point(4, 2.0, rng);
      double q = std::abs(net(x) - net(y)) / (x - y).norm();
      EXPECT_LE(q, cert * (1 + 1e-12));
    }
  }
}

TEST(RandomNet, DeterministicPerSeed) {
  NeuralNet a = random_net(3, {4, 1}, Activation::relu(), 0.5, 7);
  NeuralNet b = random_net(3, {4, 1}, Activation::relu(), 0.5, 7);
  NeuralNet c = random_net(3, {4, 1}, Activation::relu(), 0.5, 8);
  EXPECT_EQ(a.weights()[0], b.weights()[0]);
  EXPECT_NE(a.weights()[0], c.weights()[0]);
  EXPECT_LE(a.weights()[0].cwiseAbs().maxCoeff(), 0.5);
}

TEST(NeuralNet, JsonRoundTrip) {
  NeuralNet net = random_net(3, {2, 2, 1}, Activation::sigmoid(), 1.0, 3);
  nlohmann::json j = net;
  NeuralNet back = net_from_json(j);
  Vector x = Vector::LinSpaced(3, -1, 1);
  EXPECT_EQ(back(x), net(x));
  NeuralNet custom({Matrix::Ones(1, 2)}, Activation::custom(0.3));
  nlohmann::json jc = custom;
  EXPECT_DOUBLE_EQ(net_from_json(jc).activation().lipschitz(), 0.3);
}
