#include "tds/scenarios.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace tds;

TEST(Sample, UniformBallStaysInsideAndIsDeterministic) {
  MarginalSpec ball = uniform_ball(4, 1.0);
  Dataset a = sample(ball, 10000, 5);
  EXPECT_LE(a.features().rowwise().norm().maxCoeff(), 1.0);
  EXPECT_EQ(a, sample(ball, 10000, 5));
  EXPECT_FALSE(a == sample(ball, 10000, 6));
}

TEST(Sample, UniformBallRadialCdfKolmogorovSmirnov) {
  const std::size_t n = 100000;
  Dataset a = sample(uniform_ball(3, 1.0), n, 21);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = a.x(i).norm();
  std::sort(r.begin(), r.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double cdf = r[i] * r[i] * r[i];
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LE(ks, 0.02);
}

TEST(Sample, GaussianMeanAndScale) {
  MarginalSpec g{Gaussian{(Vector(2) << 1.0, -2.0).finished(), (Vector(2) << 0.5, 2.0).finished()}, 2, {}, {}};
  Dataset d = sample(g, 100000, 3);
  Vector mean = d.features().colwise().mean().transpose();
  EXPECT_NEAR(mean(0), 1.0, 0.02);
  EXPECT_NEAR(mean(1), -2.0, 0.02);
  double var1 = (d.features().col(1).array() - mean(1)).square().mean();
  EXPECT_NEAR(var1, 4.0, 0.1);
}

TEST(Sample, AxisScaleAndShift) {
  MarginalSpec m = uniform_ball(2, 1.0);
  m.axis_scale = (Vector(2) << 3.0, 1.0).finished();
  m.shift = (Vector(2) << 0.0, 5.0).finished();
  Dataset d = sample(m, 5000, 1);
  EXPECT_GT(d.features().col(0).cwiseAbs().maxCoeff(), 1.5);
  EXPECT_GT(d.features().col(1).minCoeff(), 3.9);
}

TEST(Sample, PointMassMixtureWeights) {
  MarginalSpec m{PointMassMixture{{Vector::Zero(1), Vector::Ones(1)}, {0.25, 0.75}}, 1, {}, {}};
  Dataset d = sample(m, 40000, 2);
  EXPECT_NEAR(d.features().mean(), 0.75, 0.01);
  MarginalSpec bad{PointMassMixture{{Vector::Zero(1)}, {0.5}}, 1, {}, {}};
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(Label, NoiselessLabelsMatchTarget) {
  ScenarioSpec s = preset_scenario("ball-sigmoid");
  s.label_noise_sd = 0.0;
  Dataset x = sample(s.train_marginal, 500, 4);
  LabeledResult r = label(x, s, 4);
  EXPECT_EQ(r.stats.target_loss, 0.0);
  EXPECT_EQ(r.stats.corrupted, 0u);
}

TEST(Label, NoiseResidualApproachesSd) {
  ScenarioSpec s = preset_scenario("gaussian-linear");
  s.label_noise_sd = 0.2;
  s.M = 100.0;
  LabeledResult r = label(sample(s.train_marginal, 50000, 1), s, 1);
  EXPECT_NEAR(r.stats.target_loss, 0.2, 0.005);
}

TEST(Label, FullCorruptionIsUniformNoise) {
  ScenarioSpec s = preset_scenario("ball-zero");
  s.label_corruption_rate = 1.0;
  s.M = 2.0;
  LabeledResult r = label(sample(s.train_marginal, 50000, 8), s, 8);
  EXPECT_EQ(r.stats.corrupted, 50000u);
  // Uniform[-M, M] against f = 0 has RMS M / sqrt(3).
  EXPECT_NEAR(r.stats.target_loss, 2.0 / std::sqrt(3.0), 0.01);
  EXPECT_LE(r.data.labels().cwiseAbs().maxCoeff(), 2.0);
}

TEST(Label, LabelsAlwaysBoundedByM) {
  ScenarioSpec s = preset_scenario("gaussian-linear");
  s.label_noise_sd = 5.0;
  s.M = 1.0;
  LabeledResult r = label(sample(s.train_marginal, 5000, 2), s, 2);
  EXPECT_LE(r.data.labels().cwiseAbs().maxCoeff(), 1.0);
}

TEST(Adversarial, SecondMomentEqualsY) {
  AdversarialPair pair = adversarial_label_scenario(1.0, 1e-4, 100);
  EXPECT_NEAR(pair.second_moment(), 1.0, 1e-12);
  EXPECT_NEAR(pair.planted_label, 100.0, 1e-12);
  EXPECT_THROW(adversarial_label_scenario(1.0, 0.01, 100), ContractError);
}

TEST(Adversarial, EveryHypothesisLosesQuarterOfY) {
  AdversarialPair pair = adversarial_label_scenario(1.0, 1e-4, 100);
  for (double h : {-50.0, 0.0, 10.0, 49.99, 50.0, 75.0, 100.0, 1e3})
    EXPECT_GE(pair.worst_case_error(h), pair.Y / 4 - 1e-12);
}

TEST(Adversarial, InstancesShareTrainingSamples) {
  AdversarialPair pair = adversarial_label_scenario(1.0, 1e-4, 100);
  Dataset x = sample(pair.consistent.train_marginal, 200, 9);
  EXPECT_EQ(label(x, pair.consistent, 9).data, label(x, pair.null, 9).data);
  // Planted label follows the consistent target.
  EXPECT_NEAR(evaluate_target(pair.consistent.target, pair.planted_point), pair.planted_label, 1e-12);
  EXPECT_EQ(evaluate_target(pair.null.target, pair.planted_point), 0.0);
}

TEST(Sources, FiniteSourceExhausts) {
  Dataset d = sample(uniform_ball(2, 1.0), 10, 1);
  Source src = finite_source(d);
  Rng rng = substream(0, 0);
  EXPECT_EQ(src(6, rng), d.slice(0, 6));
  EXPECT_THROW(src(6, rng), SourceExhausted);
}

TEST(Scenario, JsonRoundTrip) {
  for (const auto& name : preset_names()) {
    ScenarioSpec s = preset_scenario(name, 3);
    nlohmann::json j = s;
    ScenarioSpec back = scenario_from_json(j);
    nlohmann::json j2 = back;
    EXPECT_EQ(j, j2) << name;
  }
  EXPECT_THROW(preset_scenario("nope"), ContractError);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"train_marginal", {{"type", "cube"}, {"dim", 1}}}}), ContractError);
}

TEST(Scenario, DimensionMismatchRejected) {
  ScenarioSpec s = preset_scenario("ball-sigmoid");
  s.test_marginal = uniform_ball(4, 1.0);
  EXPECT_THROW(s.validate(), ContractError);
}
