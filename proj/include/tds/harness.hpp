#pragma once

#include "tds/core.hpp"
#include "tds/kernels.hpp"
#include "tds/scenarios.hpp"
#include "tds/tds_moment.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tds {

enum class Pipeline { kernel, moment };

std::string to_string(Pipeline p);
Pipeline pipeline_from_string(const std::string& s);

enum class ReferenceChoice { automatic, analytic, empirical };

struct ExperimentConfig {
  std::string name = "experiment";
  Pipeline pipeline = Pipeline::kernel;
  std::string scenario_id;  // preset name, empty for an inline scenario
  ScenarioSpec scenario = preset_scenario("ball-sigmoid");
  TdsParams params;
  KernelSpec kernel;
  UniformApproxParams approx;
  /// Replace A and B with values derived from the kernel and the net target.
  bool derive_kernel_bounds = false;
  ReferenceChoice reference = ReferenceChoice::automatic;
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  std::size_t holdout = 10000;

  void validate() const;
};

/// Throws ContractError on schema violations. A "scenario" entry may be a
/// preset name or an inline scenario object.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

/// sup of K(x, x) over the radius-R ball.
double kernel_bound_A(const KernelSpec& spec, double R);
/// Representation bound for a net target with the degree of `spec`, with
/// all hidden constants set to 1: (2 ||W1||_{2,inf})^l W for sigmoid nets
/// (depth 2 exponent), (k + l)^l for Lipschitz nets, 2^l when k = 1.
double kernel_bound_B(const NeuralNet& net, const KernelSpec& spec, double epsilon);

struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool accepted = false;
  std::string reason;  // empty when accepted
  std::string detail;
  double statistic = 0.0;  // rho or max moment deviation
  double threshold = 0.0;
  std::optional<double> test_loss;
  std::optional<double> test_loss_se;
  double opt_hat = 0.0;
  double lambda_hat = 0.0;
  double bound = 0.0;  // opt_hat + lambda_hat + 5 eps
  std::optional<double> excess;  // test_loss - (opt_hat + lambda_hat)
  std::optional<bool> within_bound;  // test_loss <= bound + 2 se
  double seconds = 0.0;  // wall clock, excluded from JSON and CSV
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<TrialRecord> trials;
  nlohmann::json sample_sizes;
  double A = 0.0;
  double B = 0.0;
  double wall_seconds = 0.0;

  std::size_t accepted() const;
  double accept_rate() const;
  std::map<std::string, std::size_t> reject_counts() const;
  std::optional<double> mean_excess() const;
  std::optional<double> p95_excess() const;
  std::size_t within_bound_count() const;
};

/// Runs config.trials independent trials, in parallel, aggregated by index.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Everything but timings, so equal configs give equal bytes.
nlohmann::json report_to_json(const ExperimentReport& report);
std::string report_json_string(const ExperimentReport& report);
/// Header plus one row per trial.
std::string report_csv(const ExperimentReport& report);
std::string report_text(const ExperimentReport& report);

struct ReportPaths {
  std::string json;
  std::string csv;   // empty to skip
  std::string text;  // empty to skip
};

void emit_report(const ExperimentReport& report, const ReportPaths& paths);

/// Loss sqrt(mean r^2) and its delta-method standard error.
struct LossEstimate {
  double loss = 0.0;
  double se = 0.0;
};
LossEstimate holdout_loss(const Evaluator& h, const Dataset& holdout);

}  // namespace tds
