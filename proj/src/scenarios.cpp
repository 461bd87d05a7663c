#include "tds/scenarios.hpp"

#include "tds/random.hpp"

#include <cmath>
#include <memory>
#include <numeric>

namespace tds {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractError(what);
}

void require_positive(const Vector& v, const char* what) {
  for (double s : v) require(std::isfinite(s) && s > 0, std::string(what) + " entries must be positive");
}

Vector vector_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

void MarginalSpec::validate() const {
  require(dim >= 1, "marginal dimension must be positive");
  auto d = static_cast<Eigen::Index>(dim);
  std::visit(overloaded{
                 [](const UniformBall& b) { require(b.radius > 0, "UniformBall radius must be positive"); },
                 [](const UniformCube& c) { require(c.half_width > 0, "UniformCube half width must be positive"); },
                 [d](const Gaussian& g) {
                   require(g.mean.size() == 0 || g.mean.size() == d, "Gaussian mean has wrong dimension");
                   require(g.scale.size() == 0 || g.scale.size() == d, "Gaussian scale has wrong dimension");
                   require_positive(g.scale, "Gaussian scale");
                 },
                 [](const StudentT& t) {
                   require(t.dof > 0, "StudentT dof must be positive");
                   require(t.scale > 0, "StudentT scale must be positive");
                 },
                 [d](const PointMassMixture& m) {
                   require(!m.points.empty(), "PointMassMixture needs at least one point");
                   require(m.points.size() == m.weights.size(), "PointMassMixture weight count mismatch");
                   double total = 0.0;
                   for (std::size_t i = 0; i < m.points.size(); ++i) {
                     require(m.points[i].size() == d, "PointMassMixture point has wrong dimension");
                     require(m.weights[i] >= 0, "PointMassMixture weights must be nonnegative");
                     total += m.weights[i];
                   }
                   require(std::abs(total - 1.0) <= 1e-9, "PointMassMixture weights must sum to 1");
                 },
             },
             variant);
  if (axis_scale) {
    require(axis_scale->size() == d, "axis_scale has wrong dimension");
    require_positive(*axis_scale, "axis_scale");
  }
  if (shift) {
    require(shift->size() == d, "shift has wrong dimension");
    require(shift->allFinite(), "shift must be finite");
  }
}

MarginalSpec uniform_ball(std::size_t d, double radius) { return MarginalSpec{UniformBall{radius}, d, {}, {}}; }

MarginalSpec standard_gaussian(std::size_t d) { return MarginalSpec{Gaussian{}, d, {}, {}}; }

double evaluate_target(const Target& target, const Vector& x) {
  return std::visit([&](const auto& f) { return f(x); }, target);
}

std::size_t target_dim(const Target& target) {
  return std::visit(overloaded{[](const NeuralNet& n) { return n.input_dim(); },
                               [](const DensePolynomial& p) { return p.dim(); }},
                    target);
}

Evaluator target_evaluator(const Target& target) {
  return [target](const Vector& x) { return evaluate_target(target, x); };
}

void ScenarioSpec::validate() const {
  train_marginal.validate();
  test_marginal.validate();
  require(train_marginal.dim == test_marginal.dim, "train and test marginals differ in dimension");
  require(target_dim(target) == train_marginal.dim, "target dimension does not match marginals");
  require(label_noise_sd >= 0, "label_noise_sd must be nonnegative");
  require(label_corruption_rate >= 0 && label_corruption_rate <= 1, "label_corruption_rate must lie in [0,1]");
  require(M > 0, "M must be positive");
}

Dataset sample(const MarginalSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng = substream(seed, 0);
  return sample(spec, n, rng);
}

Dataset sample(const MarginalSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  auto d = static_cast<Eigen::Index>(spec.dim);
  PointMatrix x(static_cast<Eigen::Index>(n), d);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::visit(overloaded{
                 [&](const UniformBall& b) {
                   for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = uniform_ball_point(d, b.radius, rng).transpose();
                 },
                 [&](const UniformCube& c) {
                   for (Eigen::Index i = 0; i < x.rows(); ++i)
                     for (Eigen::Index j = 0; j < d; ++j) x(i, j) = c.half_width * unif(rng);
                 },
                 [&](const Gaussian& g) {
                   for (Eigen::Index i = 0; i < x.rows(); ++i)
                     for (Eigen::Index j = 0; j < d; ++j) {
                       double z = gauss(rng);
                       if (g.scale.size() != 0) z *= g.scale(j);
                       if (g.mean.size() != 0) z += g.mean(j);
                       x(i, j) = z;
                     }
                 },
                 [&](const StudentT& t) {
                   std::student_t_distribution<double> st(t.dof);
                   for (Eigen::Index i = 0; i < x.rows(); ++i)
                     for (Eigen::Index j = 0; j < d; ++j) x(i, j) = t.scale * st(rng);
                 },
                 [&](const PointMassMixture& m) {
                   std::discrete_distribution<std::size_t> pick(m.weights.begin(), m.weights.end());
                   for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = m.points[pick(rng)].transpose();
                 },
             },
             spec.variant);
  if (spec.axis_scale)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = x.row(i).cwiseProduct(spec.axis_scale->transpose());
  if (spec.shift) x.rowwise() += spec.shift->transpose();
  return Dataset(std::move(x));
}

LabeledResult label(const Dataset& data, const ScenarioSpec& scenario, std::uint64_t seed) {
  Rng rng = substream(seed, 1);
  return label(data, scenario, rng);
}

LabeledResult label(const Dataset& data, const ScenarioSpec& scenario, Rng& rng) {
  scenario.validate();
  if (data.dim() != target_dim(scenario.target)) throw ContractError("label: data dimension does not match target");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> noise_label(-scenario.M, scenario.M);
  Vector y(static_cast<Eigen::Index>(data.size()));
  LabelStats stats;
  double resid = 0.0;
  double noise = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double f = evaluate_target(scenario.target, data.x(i));
    // Draws happen unconditionally so the stream layout does not depend on the rates.
    double z = scenario.label_noise_sd * gauss(rng);
    double u = coin(rng);
    double replacement = noise_label(rng);
    double v = clip(f + z, scenario.M);
    if (u < scenario.label_corruption_rate) {
      v = replacement;
      ++stats.corrupted;
    }
    y(static_cast<Eigen::Index>(i)) = v;
    resid += (v - f) * (v - f);
    noise += z * z;
  }
  if (!data.empty()) {
    stats.target_loss = std::sqrt(resid / static_cast<double>(data.size()));
    stats.noise_rms = std::sqrt(noise / static_cast<double>(data.size()));
  }
  return {data.with_labels(std::move(y)), stats};
}

double AdversarialPair::worst_case_error(double h) const {
  double consistent_err = p * (h - planted_label) * (h - planted_label);
  double null_err = p * h * h;
  return std::max(consistent_err, null_err);
}

AdversarialPair adversarial_label_scenario(double Y, double p, std::size_t m_expected, std::size_t d,
                                           std::uint64_t seed) {
  require(Y > 0, "adversarial scenario: Y must be positive");
  require(p > 0 && p < 1, "adversarial scenario: p must lie in (0,1)");
  require(m_expected >= 1, "adversarial scenario: m_expected must be positive");
  require(p * static_cast<double>(m_expected) < 0.5, "adversarial scenario: p must be below 1/(2m)");
  require(d >= 1, "adversarial scenario: dimension must be positive");

  Vector w = Vector::Zero(static_cast<Eigen::Index>(d));
  w(0) = 1.0;
  double scale = std::sqrt(Y / p);
  Vector planted = scale * w;
  Vector origin = Vector::Zero(static_cast<Eigen::Index>(d));

  MarginalSpec train{PointMassMixture{{origin}, {1.0}}, d, {}, {}};
  MarginalSpec test{PointMassMixture{{origin, planted}, {1.0 - p, p}}, d, {}, {}};

  AdversarialPair pair{
      ScenarioSpec{train, test, DensePolynomial::linear(w), 0.0, 0.0, scale, seed},
      ScenarioSpec{train, test, DensePolynomial(d), 0.0, 0.0, scale, seed},
      planted,
      scale,
      p,
      Y,
  };
  return pair;
}

Source marginal_source(MarginalSpec marginal) {
  marginal.validate();
  return [marginal](std::size_t n, Rng& rng) { return sample(marginal, n, rng); };
}

Source labeled_source(ScenarioSpec scenario, MarginalSpec marginal) {
  scenario.validate();
  marginal.validate();
  return [scenario, marginal](std::size_t n, Rng& rng) {
    Dataset x = sample(marginal, n, rng);
    return label(x, scenario, rng).data;
  };
}

Source finite_source(Dataset data) {
  auto cursor = std::make_shared<std::size_t>(0);
  auto shared = std::make_shared<const Dataset>(std::move(data));
  return [shared, cursor](std::size_t n, Rng&) {
    if (*cursor + n > shared->size())
      throw SourceExhausted("requested " + std::to_string(n) + " samples, " +
                            std::to_string(shared->size() - *cursor) + " remain");
    Dataset out = shared->slice(*cursor, n);
    *cursor += n;
    return out;
  };
}

namespace {

// Depth-2 sigmoid net on R^3 with k = 2 unit-norm first-layer rows.
NeuralNet preset_sigmoid_net(std::uint64_t seed) {
  NeuralNet raw = random_net(3, {2, 1}, Activation::sigmoid(), 1.0, seed);
  std::vector<Matrix> w = raw.weights();
  for (Eigen::Index i = 0; i < w[0].rows(); ++i) w[0].row(i).normalize();
  return NeuralNet(std::move(w), Activation::sigmoid());
}

ScenarioSpec ball_sigmoid(std::uint64_t seed) {
  NeuralNet net = preset_sigmoid_net(seed + 17);
  double M = std::max(1.0, entrywise_l1_norm(net.weights()[1]));
  MarginalSpec ball = uniform_ball(3, 1.0);
  return ScenarioSpec{ball, ball, net, 0.05, 0.0, M, seed};
}

ScenarioSpec gaussian_linear(std::uint64_t seed) {
  Vector w(3);
  w << 0.5, -0.3, 0.2;
  MarginalSpec g = standard_gaussian(3);
  return ScenarioSpec{g, g, DensePolynomial::linear(w), 0.1, 0.0, 3.0, seed};
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"ball-sigmoid",  "ball-sigmoid-inflated", "ball-sigmoid-outside", "ball-zero",
          "gaussian-linear", "gaussian-mean-shift", "gaussian-student-t"};
}

ScenarioSpec preset_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "ball-sigmoid") return ball_sigmoid(seed);
  if (name == "ball-sigmoid-inflated") {
    ScenarioSpec s = ball_sigmoid(seed);
    Vector scale = Vector::Ones(3);
    scale(0) = std::sqrt(2.0);
    s.test_marginal.axis_scale = scale;
    return s;
  }
  if (name == "ball-sigmoid-outside") {
    ScenarioSpec s = ball_sigmoid(seed);
    s.test_marginal.axis_scale = Vector::Constant(3, 2.0);
    return s;
  }
  if (name == "ball-zero") {
    MarginalSpec ball = uniform_ball(3, 1.0);
    return ScenarioSpec{ball, ball, DensePolynomial(3), 0.0, 0.0, 1.0, seed};
  }
  if (name == "gaussian-linear") return gaussian_linear(seed);
  if (name == "gaussian-mean-shift") {
    ScenarioSpec s = gaussian_linear(seed);
    Vector shift = Vector::Zero(3);
    shift(0) = 1.0;
    s.test_marginal.shift = shift;
    return s;
  }
  if (name == "gaussian-student-t") {
    ScenarioSpec s = gaussian_linear(seed);
    // Unit variance per coordinate, matching the standard Gaussian.
    s.test_marginal = MarginalSpec{StudentT{3.0, std::sqrt(1.0 / 3.0)}, 3, {}, {}};
    return s;
  }
  throw ContractError("unknown scenario preset: " + name);
}

void to_json(nlohmann::json& j, const MarginalSpec& m) {
  j = std::visit(overloaded{
                     [](const UniformBall& b) { return nlohmann::json{{"type", "uniform_ball"}, {"radius", b.radius}}; },
                     [](const UniformCube& c) {
                       return nlohmann::json{{"type", "uniform_cube"}, {"half_width", c.half_width}};
                     },
                     [](const Gaussian& g) {
                       nlohmann::json out{{"type", "gaussian"}};
                       if (g.mean.size()) out["mean"] = vector_to_json(g.mean);
                       if (g.scale.size()) out["scale"] = vector_to_json(g.scale);
                       return out;
                     },
                     [](const StudentT& t) {
                       return nlohmann::json{{"type", "student_t"}, {"dof", t.dof}, {"scale", t.scale}};
                     },
                     [](const PointMassMixture& mix) {
                       nlohmann::json pts = nlohmann::json::array();
                       for (const auto& p : mix.points) pts.push_back(vector_to_json(p));
                       return nlohmann::json{{"type", "point_mass_mixture"}, {"points", pts}, {"weights", mix.weights}};
                     },
                 },
                 m.variant);
  j["dim"] = m.dim;
  if (m.axis_scale) j["axis_scale"] = vector_to_json(*m.axis_scale);
  if (m.shift) j["shift"] = vector_to_json(*m.shift);
}

MarginalSpec marginal_from_json(const nlohmann::json& j) {
  try {
    MarginalSpec m;
    m.dim = j.at("dim").get<std::size_t>();
    std::string type = j.at("type").get<std::string>();
    if (type == "uniform_ball") {
      m.variant = UniformBall{j.value("radius", 1.0)};
    } else if (type == "uniform_cube") {
      m.variant = UniformCube{j.value("half_width", 1.0)};
    } else if (type == "gaussian") {
      Gaussian g;
      if (j.contains("mean")) g.mean = vector_from_json(j["mean"]);
      if (j.contains("scale")) g.scale = vector_from_json(j["scale"]);
      m.variant = g;
    } else if (type == "student_t") {
      m.variant = StudentT{j.value("dof", 3.0), j.value("scale", 1.0)};
    } else if (type == "point_mass_mixture") {
      PointMassMixture mix;
      for (const auto& p : j.at("points")) mix.points.push_back(vector_from_json(p));
      mix.weights = j.at("weights").get<std::vector<double>>();
      m.variant = mix;
    } else {
      throw ContractError("unknown marginal type: " + type);
    }
    if (j.contains("axis_scale")) m.axis_scale = vector_from_json(j["axis_scale"]);
    if (j.contains("shift")) m.shift = vector_from_json(j["shift"]);
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("marginal: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const Target& t) {
  std::visit(overloaded{[&](const NeuralNet& n) {
                          to_json(j, n);
                          j["type"] = "net";
                        },
                        [&](const DensePolynomial& p) {
                          to_json(j, p);
                          j["type"] = "polynomial";
                        }},
             t);
}

Target target_from_json(const nlohmann::json& j) {
  try {
    std::string type = j.at("type").get<std::string>();
    if (type == "net") return net_from_json(j);
    if (type == "polynomial") return polynomial_from_json(j);
    throw ContractError("unknown target type: " + type);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("target: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const ScenarioSpec& s) {
  j = nlohmann::json{{"train_marginal", s.train_marginal}, {"test_marginal", s.test_marginal},
                     {"target", s.target},  {"label_noise_sd", s.label_noise_sd},
                     {"label_corruption_rate", s.label_corruption_rate}, {"M", s.M},
                     {"seed", s.seed}};
}

ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  try {
    ScenarioSpec s{marginal_from_json(j.at("train_marginal")),
                   marginal_from_json(j.contains("test_marginal") ? j["test_marginal"] : j["train_marginal"]),
                   target_from_json(j.at("target")),
                   j.value("label_noise_sd", 0.0),
                   j.value("label_corruption_rate", 0.0),
                   j.value("M", 1.0),
                   j.value("seed", std::uint64_t{0})};
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("scenario: ") + e.what());
  }
}

}  // namespace tds
