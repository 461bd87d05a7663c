#pragma once

#include "tds/core.hpp"
#include "tds/nets.hpp"
#include "tds/polynomial.hpp"
#include "tds/random.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <optional>
#include <variant>
#include <vector>

namespace tds {

struct UniformBall {
  double radius = 1.0;
};
struct UniformCube {
  double half_width = 1.0;  // uniform on [-a, a]^d
};
struct Gaussian {
  Vector mean;   // empty means zero
  Vector scale;  // per-coordinate standard deviation; empty means ones
};
struct StudentT {
  double dof = 3.0;
  double scale = 1.0;
};
struct PointMassMixture {
  std::vector<Vector> points;
  std::vector<double> weights;
};

/// Feature marginal over R^d. `axis_scale` and `shift` are applied after
/// drawing from the base variant: x -> axis_scale .* x + shift.
struct MarginalSpec {
  std::variant<UniformBall, UniformCube, Gaussian, StudentT, PointMassMixture> variant;
  std::size_t dim = 1;
  std::optional<Vector> axis_scale;
  std::optional<Vector> shift;

  void validate() const;
  bool has_transform() const { return axis_scale.has_value() || shift.has_value(); }
};

MarginalSpec uniform_ball(std::size_t d, double radius);
MarginalSpec standard_gaussian(std::size_t d);

/// Ground-truth function generating labels.
using Target = std::variant<NeuralNet, DensePolynomial>;

double evaluate_target(const Target& target, const Vector& x);
std::size_t target_dim(const Target& target);
Evaluator target_evaluator(const Target& target);

struct ScenarioSpec {
  MarginalSpec train_marginal;
  MarginalSpec test_marginal;
  Target target;
  double label_noise_sd = 0.0;
  double label_corruption_rate = 0.0;
  double M = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// n i.i.d. draws; identical for identical (spec, n, seed).
Dataset sample(const MarginalSpec& spec, std::size_t n, std::uint64_t seed);
Dataset sample(const MarginalSpec& spec, std::size_t n, Rng& rng);

struct LabelStats {
  /// ||y - f*||_S on the labeled sample: an upper bound on the empirical optimum.
  double target_loss = 0.0;
  /// RMS of the pre-clipping Gaussian noise actually drawn.
  double noise_rms = 0.0;
  std::size_t corrupted = 0;
};

struct LabeledResult {
  Dataset data;
  LabelStats stats;
};

/// y = cl_M(f(x) + N(0, sd^2)); a corruption_rate fraction of labels is
/// replaced by independent Uniform[-M, M].
LabeledResult label(const Dataset& data, const ScenarioSpec& scenario, std::uint64_t seed);
LabeledResult label(const Dataset& data, const ScenarioSpec& scenario, Rng& rng);

/// Two instances sharing the training distribution (point mass at the
/// origin, label 0) whose test marginals put mass p on x_hat = sqrt(Y/p) w.
/// The first labels x_hat with sqrt(Y/p) (target w.x); the second with 0.
struct AdversarialPair {
  ScenarioSpec consistent;  // test labels y = w . x
  ScenarioSpec null;        // test labels y = 0
  Vector planted_point;
  double planted_label = 0.0;
  double p = 0.0;
  double Y = 0.0;

  /// E[y^2] under the first instance's test distribution: p * (sqrt(Y/p))^2.
  double second_moment() const { return p * planted_label * planted_label; }
  /// max over the two instances of p * (h(x_hat) - y)^2.
  double worst_case_error(double h_at_planted) const;
};

/// Requires p in (0, 1) with p * m_expected < 1/2.
AdversarialPair adversarial_label_scenario(double Y, double p, std::size_t m_expected, std::size_t d = 1,
                                           std::uint64_t seed = 0);

/// Yields n samples using the caller's generator.
using Source = std::function<Dataset(std::size_t n, Rng& rng)>;

/// Unlabeled draws from a marginal.
Source marginal_source(MarginalSpec marginal);
/// Draws from `marginal` labeled by the scenario's target and noise model.
Source labeled_source(ScenarioSpec scenario, MarginalSpec marginal);
/// Serves rows of a fixed dataset in order, ignoring the generator; throws
/// SourceExhausted once the rows run out.
Source finite_source(Dataset data);

/// Named scenarios used by the harness and the CLI.
std::vector<std::string> preset_names();
ScenarioSpec preset_scenario(const std::string& name, std::uint64_t seed = 0);

void to_json(nlohmann::json& j, const MarginalSpec& m);
MarginalSpec marginal_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const Target& t);
Target target_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const ScenarioSpec& s);
ScenarioSpec scenario_from_json(const nlohmann::json& j);

}  // namespace tds
