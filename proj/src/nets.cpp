#include "tds/nets.hpp"

#include "tds/random.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace tds {

Activation Activation::custom(double lipschitz, std::function<double(double)> fn) {
  if (!(lipschitz >= 0)) throw ContractError("custom activation: Lipschitz constant must be >= 0");
  if (!fn) fn = [lipschitz](double v) { return lipschitz * std::tanh(v); };
  if (fn(0.0) > 1.0) throw ContractError("activation must satisfy sigma(0) <= 1");
  return Activation(ActivationKind::CustomLipschitz, lipschitz, std::move(fn));
}

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

double Activation::operator()(double v) const {
  switch (kind_) {
    case ActivationKind::Sigmoid: return tds::sigmoid(v);
    case ActivationKind::ReLU: return v > 0 ? v : 0.0;
    case ActivationKind::CustomLipschitz: return fn_(v);
  }
  return v;
}

std::string Activation::name() const {
  switch (kind_) {
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::CustomLipschitz: return "custom";
  }
  return "unknown";
}

NeuralNet::NeuralNet(std::vector<Matrix> weights, Activation activation)
    : weights_(std::move(weights)), activation_(std::move(activation)) {
  if (weights_.empty()) throw ContractError("neural net needs at least one layer");
  if (weights_.front().cols() < 1) throw ContractError("neural net input dimension must be positive");
  for (std::size_t i = 1; i < weights_.size(); ++i)
    if (weights_[i].cols() != weights_[i - 1].rows())
      throw ContractError("layer " + std::to_string(i + 1) + " expects " + std::to_string(weights_[i].cols()) +
                          " inputs but layer " + std::to_string(i) + " has " +
                          std::to_string(weights_[i - 1].rows()) + " outputs");
  if (weights_.back().rows() != 1) throw ContractError("last layer must have a single output");
  for (const auto& w : weights_)
    if (!w.allFinite()) throw ContractError("neural net weights must be finite");
}

double NeuralNet::operator()(const Vector& x) const {
  if (x.size() != weights_.front().cols())
    throw ContractError("net_eval: input has dimension " + std::to_string(x.size()) + ", expected " +
                        std::to_string(weights_.front().cols()));
  Vector f = weights_.front() * x;
  for (std::size_t i = 1; i < weights_.size(); ++i) {
    f = f.unaryExpr([this](double v) { return activation_(v); }).eval();
    f = weights_[i] * f;
  }
  return f(0);
}

double net_eval(const NeuralNet& net, const Vector& x) { return net(x); }

double two_inf_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return std::sqrt(a.rowwise().squaredNorm().maxCoeff());
}

double entrywise_l1_norm(const Matrix& a) { return a.cwiseAbs().sum(); }

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

NetNorms net_norms(const NeuralNet& net) { return net_norms(net, net.activation().lipschitz()); }

NetNorms net_norms(const NeuralNet& net, double activation_lipschitz) {
  NetNorms n;
  const auto& w = net.weights();
  n.w1_two_inf = two_inf_norm(w.front());
  for (std::size_t i = 1; i < w.size(); ++i) n.w_sum_l1 += entrywise_l1_norm(w[i]);
  double k = static_cast<double>(net.first_width());
  n.lipschitz_cert = std::sqrt(k) * n.w1_two_inf *
                     std::pow(n.w_sum_l1 * activation_lipschitz, static_cast<double>(w.size() - 1));
  return n;
}

NeuralNet random_net(std::size_t d, const std::vector<std::size_t>& layer_sizes, const Activation& activation,
                     double weight_scale, std::uint64_t seed) {
  if (d == 0 || layer_sizes.empty() || layer_sizes.back() != 1)
    throw ContractError("random_net: layer sizes must be a nonempty chain ending in 1");
  if (!(weight_scale >= 0)) throw ContractError("random_net: weight_scale must be >= 0");
  Rng rng = substream(seed, 0);
  std::uniform_real_distribution<double> u(-weight_scale, weight_scale);
  std::vector<Matrix> weights;
  std::size_t prev = d;
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ContractError("random_net: layer sizes must be positive");
    Matrix w(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(prev));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = weight_scale > 0 ? u(rng) : 0.0;
    weights.push_back(std::move(w));
    prev = s;
  }
  return NeuralNet(std::move(weights), activation);
}

void to_json(nlohmann::json& j, const NeuralNet& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& w : net.weights()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      std::vector<double> row(w.row(i).begin(), w.row(i).end());
      rows.push_back(row);
    }
    layers.push_back(rows);
  }
  j = nlohmann::json{{"weights", layers}, {"activation", net.activation().name()}};
  if (net.activation().kind() == ActivationKind::CustomLipschitz) j["lipschitz"] = net.activation().lipschitz();
}

NeuralNet net_from_json(const nlohmann::json& j) {
  std::vector<Matrix> weights;
  for (const auto& layer : j.at("weights")) {
    auto rows = layer.get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows.front().empty()) throw ContractError("net JSON: empty weight matrix");
    Matrix w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) throw ContractError("net JSON: ragged weight matrix");
      for (std::size_t c = 0; c < rows[i].size(); ++c)
        w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    weights.push_back(std::move(w));
  }
  auto name = j.value("activation", std::string("sigmoid"));
  Activation act = Activation::sigmoid();
  if (name == "relu")
    act = Activation::relu();
  else if (name == "custom")
    act = Activation::custom(j.at("lipschitz").get<double>());
  else if (name != "sigmoid")
    throw ContractError("net JSON: unknown activation " + name);
  return NeuralNet(std::move(weights), act);
}

void to_json(nlohmann::json& j, const NetNorms& n) {
  j = nlohmann::json{{"w1_two_inf", n.w1_two_inf}, {"w_sum_l1", n.w_sum_l1}, {"lipschitz_cert", n.lipschitz_cert}};
}

}  // namespace tds
