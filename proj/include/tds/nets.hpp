#pragma once

#include "tds/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace tds {

enum class ActivationKind { Sigmoid, ReLU, CustomLipschitz };

/// Elementwise activation with a known Lipschitz constant.
///
/// CustomLipschitz carries a caller-supplied function and its declared
/// constant; when built from JSON the function is L * tanh(x).
class Activation {
 public:
  static Activation sigmoid() { return Activation(ActivationKind::Sigmoid, 0.25, {}); }
  static Activation relu() { return Activation(ActivationKind::ReLU, 1.0, {}); }
  static Activation custom(double lipschitz, std::function<double(double)> fn = {});

  ActivationKind kind() const { return kind_; }
  double lipschitz() const { return lipschitz_; }
  double operator()(double v) const;

  std::string name() const;

 private:
  Activation(ActivationKind kind, double lipschitz, std::function<double(double)> fn)
      : kind_(kind), lipschitz_(lipschitz), fn_(std::move(fn)) {}

  ActivationKind kind_;
  double lipschitz_;
  std::function<double(double)> fn_;
};

double sigmoid(double v);

/// Bias-free feedforward net: f_1 = W1 x, f_i = W_i sigma(f_{i-1}).
class NeuralNet {
 public:
  NeuralNet(std::vector<Matrix> weights, Activation activation);

  std::size_t input_dim() const { return static_cast<std::size_t>(weights_.front().cols()); }
  std::size_t depth() const { return weights_.size(); }
  /// Width of the first layer (k).
  std::size_t first_width() const { return static_cast<std::size_t>(weights_.front().rows()); }
  const std::vector<Matrix>& weights() const { return weights_; }
  const Activation& activation() const { return activation_; }

  double operator()(const Vector& x) const;

 private:
  std::vector<Matrix> weights_;
  Activation activation_;
};

double net_eval(const NeuralNet& net, const Vector& x);

struct NetNorms {
  double w1_two_inf = 0.0;  // max row 2-norm of W1
  double w_sum_l1 = 0.0;    // sum over layers i >= 2 of entrywise l1 norms
  double lipschitz_cert = 0.0;
};

double two_inf_norm(const Matrix& a);
double entrywise_l1_norm(const Matrix& a);
double spectral_norm(const Matrix& a);

/// sqrt(k) * ||W1||_{2,inf} * (W * L)^(t-1).
NetNorms net_norms(const NeuralNet& net);
/// Same certificate with an explicit activation Lipschitz constant.
NetNorms net_norms(const NeuralNet& net, double activation_lipschitz);

/// layer_sizes = (s_1, ..., s_t) with s_t = 1; entries uniform in [-scale, scale].
NeuralNet random_net(std::size_t d, const std::vector<std::size_t>& layer_sizes, const Activation& activation,
                     double weight_scale, std::uint64_t seed);

void to_json(nlohmann::json& j, const NeuralNet& net);
NeuralNet net_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const NetNorms& n);

}  // namespace tds
