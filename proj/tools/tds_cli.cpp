#include "tds/dataset_io.hpp"
#include "tds/harness.hpp"
#include "tds/nets.hpp"
#include "tds/polyapprox.hpp"
#include "tds/scenarios.hpp"

#include "CLI11.hpp"
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tds::ContractError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw tds::ContractError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tds::ContractError("cannot open " + path + " for writing");
  out << text;
}

// Applies a command-line value under a JSON pointer unless the config
// already sets it; the config wins and a warning names the conflict.
template <class T>
void merge_flag(json& config, const std::string& pointer, const std::optional<T>& flag, const std::string& name) {
  if (!flag) return;
  json::json_pointer ptr(pointer);
  json value = *flag;
  if (config.contains(ptr)) {
    if (config.at(ptr) != value)
      std::cerr << "warning: --" << name << "=" << value.dump() << " ignored; config sets " << config.at(ptr).dump()
                << "\n";
    return;
  }
  config[ptr] = value;
}

struct RunFlags {
  std::string config_path;
  std::string out = "report.json";
  std::string csv;
  std::string text;
  std::optional<std::string> scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> holdout;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> radius;
  std::optional<std::size_t> desk_m;
  std::optional<std::size_t> desk_n;
  std::optional<std::vector<int>> degree;
  std::optional<int> ell;
  std::optional<double> moment_delta;
  bool derive_bounds = false;
};

void add_run_options(CLI::App* cmd, RunFlags& f, bool experiment) {
  cmd->add_option("--config", f.config_path, "experiment config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "report JSON path");
  cmd->add_option("--csv", f.csv, "per-trial CSV path");
  cmd->add_option("--text", f.text, "text summary path");
  cmd->add_option("--scenario", f.scenario, "scenario preset name");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--trials", f.trials, experiment ? "number of trials" : "number of runs (default 1)");
  cmd->add_option("--holdout", f.holdout, "holdout size for test loss");
  cmd->add_option("--epsilon", f.epsilon, "accuracy parameter");
  cmd->add_option("--delta", f.delta, "failure probability");
  cmd->add_option("--radius", f.radius, "radius R");
  cmd->add_option("--m", f.desk_m, "desk reference sample size");
  cmd->add_option("--n", f.desk_n, "desk verification sample size");
  cmd->add_option("--degree", f.degree, "kernel degree vector");
  cmd->add_option("--ell", f.ell, "polynomial regression degree");
  cmd->add_option("--moment-delta", f.moment_delta, "moment tolerance Delta");
  cmd->add_flag("--derive-bounds", f.derive_bounds, "derive A and B from the kernel and net target");
}

tds::ExperimentConfig build_config(const RunFlags& f, std::optional<tds::Pipeline> forced) {
  json config = f.config_path.empty() ? json::object() : read_json_file(f.config_path);
  if (forced) {
    std::optional<std::string> name = tds::to_string(*forced);
    if (config.contains("pipeline") && config["pipeline"] != *name)
      std::cerr << "warning: config pipeline " << config["pipeline"].dump() << " replaced by " << *name << "\n";
    config["pipeline"] = *name;
    if (!config.contains("trials") && !f.trials) config["trials"] = 1;
  }
  merge_flag(config, "/scenario", f.scenario, "scenario");
  merge_flag(config, "/seed", f.seed, "seed");
  merge_flag(config, "/trials", f.trials, "trials");
  merge_flag(config, "/holdout", f.holdout, "holdout");
  merge_flag(config, "/params/epsilon", f.epsilon, "epsilon");
  merge_flag(config, "/params/delta", f.delta, "delta");
  merge_flag(config, "/params/R", f.radius, "radius");
  merge_flag(config, "/params/desk_m", f.desk_m, "m");
  merge_flag(config, "/params/desk_n", f.desk_n, "n");
  merge_flag(config, "/kernel/degree_vector", f.degree, "degree");
  merge_flag(config, "/approx/ell", f.ell, "ell");
  merge_flag(config, "/approx/Delta", f.moment_delta, "moment-delta");
  merge_flag(config, "/derive_kernel_bounds", f.derive_bounds ? std::optional<bool>(true) : std::nullopt,
             "derive-bounds");
  return tds::config_from_json(config);
}

int run(const RunFlags& f, std::optional<tds::Pipeline> forced) {
  tds::ExperimentConfig config = build_config(f, forced);
  tds::ExperimentReport report = tds::run_experiment(config);
  tds::emit_report(report, {f.out, f.csv, f.text});
  std::cerr << tds::report_text(report);
  return kExitOk;
}

struct GenFlags {
  std::string scenario;
  std::size_t n = 1000;
  std::string out;
  std::string side = "train";
  std::optional<std::uint64_t> seed;
  bool unlabeled = false;
  std::string format;
};

int gen(const GenFlags& f) {
  tds::ScenarioSpec spec = std::filesystem::exists(f.scenario) ? tds::scenario_from_json(read_json_file(f.scenario))
                                                               : tds::preset_scenario(f.scenario);
  if (f.seed) {
    if (std::filesystem::exists(f.scenario) && read_json_file(f.scenario).contains("seed") && spec.seed != *f.seed)
      std::cerr << "warning: --seed=" << *f.seed << " ignored; scenario sets " << spec.seed << "\n";
    else
      spec.seed = *f.seed;
  }
  if (f.side != "train" && f.side != "test") throw tds::ContractError("--side must be train or test");
  const tds::MarginalSpec& marginal = f.side == "train" ? spec.train_marginal : spec.test_marginal;
  tds::Rng rng = tds::substream(spec.seed, f.side == "train" ? 0 : 1);
  tds::Dataset data = tds::sample(marginal, f.n, rng);
  if (!f.unlabeled) data = tds::label(data, spec, rng).data;
  auto format = f.format.empty() ? tds::dataset_format_from_path(f.out) : tds::dataset_format_from_string(f.format);
  tds::save_dataset(data, f.out, format);
  return kExitOk;
}

struct ApproxFlags {
  std::string function = "sigmoid";
  std::string net;
  double radius = 4.0;
  double eps = 1e-2;
  int max_degree = 256;
  std::uint64_t seed = 0;
  std::string out;
};

int approx_report(const ApproxFlags& f) {
  json report;
  if (!f.net.empty()) {
    tds::NeuralNet net = tds::net_from_json(read_json_file(f.net));
    tds::ComposeOptions options;
    options.max_degree = f.max_degree;
    options.seed = f.seed;
    tds::ComposedNetApprox approx = tds::compose_sigmoid_net_approx(net, f.eps, f.radius, options);
    report = json{{"kind", "composed_net"},
                  {"degree_vector", approx.degree_vector},
                  {"layer_target", approx.layer_target},
                  {"certificate", approx.certificate},
                  {"net_norms", tds::net_norms(net)}};
  } else {
    tds::UnivariateCertified cert =
        tds::certify_univariate(tds::named_function(f.function), f.radius, f.eps, f.max_degree);
    report = json{{"kind", "univariate"}, {"function", f.function}, {"certificate", cert.certificate}};
  }
  write_text(f.out, report.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Testable learning under distribution shift: kernel and moment-matching pipelines"};
  app.require_subcommand(1);

  GenFlags gen_flags;
  auto* gen_cmd = app.add_subcommand("gen", "sample a dataset from a scenario");
  gen_cmd->add_option("--scenario", gen_flags.scenario, "scenario JSON file or preset name")->required();
  gen_cmd->add_option("--n", gen_flags.n, "number of samples");
  gen_cmd->add_option("--out", gen_flags.out, "output path (.csv or .jsonl)")->required();
  gen_cmd->add_option("--side", gen_flags.side, "train or test marginal");
  gen_cmd->add_option("--seed", gen_flags.seed, "seed");
  gen_cmd->add_flag("--unlabeled", gen_flags.unlabeled, "omit labels");
  gen_cmd->add_option("--format", gen_flags.format, "csv or jsonl");

  RunFlags kernel_flags, moment_flags, experiment_flags;
  auto* kernel_cmd = app.add_subcommand("kernel-run", "run the kernel pipeline");
  add_run_options(kernel_cmd, kernel_flags, false);
  auto* moment_cmd = app.add_subcommand("moment-run", "run the moment-matching pipeline");
  add_run_options(moment_cmd, moment_flags, false);
  auto* experiment_cmd = app.add_subcommand("experiment", "run repeated trials and aggregate");
  add_run_options(experiment_cmd, experiment_flags, true);

  ApproxFlags approx_flags;
  auto* approx_cmd = app.add_subcommand("approx-report", "certify a polynomial approximation");
  approx_cmd->add_option("--function", approx_flags.function, "sigmoid, relu, identity, square or tanh");
  approx_cmd->add_option("--net", approx_flags.net, "sigmoid net JSON (composed approximation)");
  approx_cmd->add_option("--radius", approx_flags.radius, "radius R");
  approx_cmd->add_option("--eps", approx_flags.eps, "target sup error");
  approx_cmd->add_option("--max-degree", approx_flags.max_degree, "degree cap");
  approx_cmd->add_option("--seed", approx_flags.seed, "Monte-Carlo seed");
  approx_cmd->add_option("--out", approx_flags.out, "output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) return gen(gen_flags);
    if (*kernel_cmd) return run(kernel_flags, tds::Pipeline::kernel);
    if (*moment_cmd) return run(moment_flags, tds::Pipeline::moment);
    if (*experiment_cmd) return run(experiment_flags, std::nullopt);
    if (*approx_cmd) return approx_report(approx_flags);
  } catch (const tds::ContractError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const tds::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
