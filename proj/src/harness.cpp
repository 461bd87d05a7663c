#include "tds/harness.hpp"

#include "tds/moments.hpp"
#include "tds/nets.hpp"
#include "tds/parallel.hpp"
#include "tds/random.hpp"
#include "tds/tds_kernel.hpp"
#include "tds/tds_moment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tds {

namespace {

using nlohmann::json;

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json optional_number(const std::optional<double>& v) { return v ? number_or_string(*v) : json(nullptr); }

std::string reference_choice_name(ReferenceChoice r) {
  switch (r) {
    case ReferenceChoice::automatic: return "auto";
    case ReferenceChoice::analytic: return "analytic";
    case ReferenceChoice::empirical: return "empirical";
  }
  return "auto";
}

ReferenceChoice reference_choice_from_string(const std::string& s) {
  if (s == "auto") return ReferenceChoice::automatic;
  if (s == "analytic") return ReferenceChoice::analytic;
  if (s == "empirical") return ReferenceChoice::empirical;
  throw ContractError("unknown reference mode: " + s);
}

TdsParams params_from_json(const json& j) {
  TdsParams p;
  p.epsilon = j.value("epsilon", p.epsilon);
  p.delta = j.value("delta", p.delta);
  p.M = j.value("M", p.M);
  p.R = j.value("R", p.R);
  p.B = j.value("B", p.B);
  p.A = j.value("A", p.A);
  p.C = j.value("C", p.C);
  p.ell_hc = j.value("ell_hc", p.ell_hc);
  p.gamma = j.value("gamma", p.gamma);
  p.scale_mode = j.value("scale_mode", std::string("desk")) == "strict" ? ScaleMode::strict : ScaleMode::desk;
  if (j.contains("scale_mode") && j["scale_mode"] != "strict" && j["scale_mode"] != "desk")
    throw ContractError("scale_mode must be \"strict\" or \"desk\"");
  p.desk_m = j.value("desk_m", p.desk_m);
  p.desk_n = j.value("desk_n", p.desk_n);
  return p;
}

json params_to_json(const TdsParams& p) {
  return json{{"epsilon", p.epsilon}, {"delta", p.delta},   {"M", p.M},
              {"R", p.R},             {"B", p.B},           {"A", p.A},
              {"C", p.C},             {"ell_hc", p.ell_hc}, {"gamma", p.gamma},
              {"scale_mode", p.scale_mode == ScaleMode::strict ? "strict" : "desk"},
              {"desk_m", p.desk_m},   {"desk_n", p.desk_n}};
}

struct TrialContext {
  const ExperimentConfig& config;
  TdsParams params;
  Source train;
  Source test;
  std::optional<ReferenceMoments> reference;
};

TrialRecord run_trial(const TrialContext& ctx, std::size_t index, json* sizes_out) {
  const ExperimentConfig& cfg = ctx.config;
  TrialRecord rec;
  rec.index = index;
  Rng seeder = substream(cfg.seed, 1000 + index);
  rec.seed = derive_seed(seeder);
  auto start = std::chrono::steady_clock::now();

  TdsOutcome outcome = Reject{RejectReason::RadiusViolation, ""};
  if (cfg.pipeline == Pipeline::kernel) {
    KernelRunResult r = tds_kernel_learn(ctx.train, ctx.test, cfg.kernel, ctx.params, rec.seed);
    outcome = r.outcome;
    rec.threshold = spectral_threshold(ctx.params);
    if (r.spectral) rec.statistic = r.spectral->rho;
    if (sizes_out) *sizes_out = r.sizes;
  } else {
    MomentRunResult r = tds_uniform_learn(ctx.train, ctx.test, ctx.reference, cfg.approx, ctx.params, rec.seed);
    outcome = r.outcome;
    rec.statistic = r.moments.max_abs_deviation;
    rec.threshold = r.effective_Delta;
    if (sizes_out)
      *sizes_out = json{{"m_train", cfg.approx.m_train},
                        {"m_test", cfg.approx.m_test},
                        {"moment_degree", cfg.approx.moment_degree()},
                        {"reference_mode", to_string(r.reference_mode)},
                        {"reference_size", r.reference_size}};
  }

  // Benchmarks with the generator's target: upper bounds on opt and lambda.
  Rng hold_train = substream(rec.seed, 11);
  Rng hold_test = substream(rec.seed, 10);
  LabeledResult train_hold = label(sample(cfg.scenario.train_marginal, cfg.holdout, hold_train), cfg.scenario, hold_train);
  LabeledResult test_hold = label(sample(cfg.scenario.test_marginal, cfg.holdout, hold_test), cfg.scenario, hold_test);
  rec.opt_hat = train_hold.stats.target_loss;
  rec.lambda_hat = train_hold.stats.target_loss + test_hold.stats.target_loss;
  rec.bound = rec.opt_hat + rec.lambda_hat + 5.0 * ctx.params.epsilon;

  if (const auto* acc = std::get_if<Accept>(&outcome)) {
    rec.accepted = true;
    Hypothesis h = acc->hypothesis;
    LossEstimate est = holdout_loss([h](const Vector& x) { return (*h)(x); }, test_hold.data);
    rec.test_loss = est.loss;
    rec.test_loss_se = est.se;
    rec.excess = est.loss - (rec.opt_hat + rec.lambda_hat);
    rec.within_bound = est.loss <= rec.bound + 2.0 * est.se;
  } else {
    const auto& rej = std::get<Reject>(outcome);
    rec.reason = to_string(rej.reason);
    rec.detail = rej.detail;
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace

std::string to_string(Pipeline p) { return p == Pipeline::kernel ? "kernel" : "moment"; }

Pipeline pipeline_from_string(const std::string& s) {
  if (s == "kernel") return Pipeline::kernel;
  if (s == "moment") return Pipeline::moment;
  throw ContractError("unknown pipeline: " + s);
}

void ExperimentConfig::validate() const {
  params.validate();
  scenario.validate();
  if (pipeline == Pipeline::kernel) kernel.validate();
  if (pipeline == Pipeline::moment) approx.validate();
  if (holdout < 1) throw ContractError("holdout size must be positive");
}

ExperimentConfig config_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ContractError("config must be a JSON object");
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.pipeline = pipeline_from_string(j.value("pipeline", std::string("kernel")));
    c.seed = j.value("seed", c.seed);
    c.trials = j.value("trials", c.trials);
    c.holdout = j.value("holdout", c.holdout);
    if (j.contains("scenario")) {
      const json& s = j["scenario"];
      if (s.is_string()) {
        c.scenario_id = s.get<std::string>();
        c.scenario = preset_scenario(c.scenario_id, c.seed);
      } else {
        c.scenario = scenario_from_json(s);
      }
    } else {
      throw ContractError("config needs a scenario");
    }
    c.params = params_from_json(j.value("params", json::object()));
    if (!j.contains("params") || !j["params"].contains("M")) c.params.M = c.scenario.M;
    if (j.contains("kernel")) c.kernel = j["kernel"].get<KernelSpec>();
    if (j.contains("approx")) c.approx = j["approx"].get<UniformApproxParams>();
    c.derive_kernel_bounds = j.value("derive_kernel_bounds", false);
    c.reference = reference_choice_from_string(j.value("reference", std::string("auto")));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ContractError(std::string("config: ") + e.what());
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"name", c.name},
         {"pipeline", to_string(c.pipeline)},
         {"params", params_to_json(c.params)},
         {"derive_kernel_bounds", c.derive_kernel_bounds},
         {"reference", reference_choice_name(c.reference)},
         {"trials", c.trials},
         {"seed", c.seed},
         {"holdout", c.holdout}};
  if (c.scenario_id.empty())
    j["scenario"] = c.scenario;
  else
    j["scenario"] = c.scenario_id;
  if (c.pipeline == Pipeline::kernel)
    j["kernel"] = c.kernel;
  else
    j["approx"] = c.approx;
  return j;
}

double kernel_bound_A(const KernelSpec& spec, double R) { return cmk_from_inner(R * R, spec); }

double kernel_bound_B(const NeuralNet& net, const KernelSpec& spec, double epsilon) {
  NetNorms norms = net_norms(net);
  double ell = static_cast<double>(spec.total_degree());
  double k = static_cast<double>(net.first_width());
  double log_b = 0.0;
  if (net.activation().kind() == ActivationKind::Sigmoid) {
    double W = std::max(1.0, norms.w_sum_l1);
    double t = static_cast<double>(net.depth());
    double inner = std::pow(W, t - 2.0) * std::pow(std::max(1.0, t * std::log(W / epsilon)), t - 2.0);
    log_b = ell * std::log(2.0 * norms.w1_two_inf) + inner * std::log(W);
  } else if (net.first_width() == 1) {
    log_b = ell * std::log(2.0);
  } else {
    log_b = ell * std::log(k + ell);
  }
  return std::max(1.0, std::exp(log_b));
}

LossEstimate holdout_loss(const Evaluator& h, const Dataset& holdout) {
  if (holdout.empty() || !holdout.labeled()) throw ContractError("holdout must be labeled and nonempty");
  const std::size_t n = holdout.size();
  std::vector<double> sq(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = holdout.y(i) - h(holdout.x(i));
    sq[i] = r * r;
    mean += sq[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : sq) var += (s - mean) * (s - mean);
  var /= static_cast<double>(std::max<std::size_t>(n - 1, 1));
  LossEstimate est;
  est.loss = std::sqrt(mean);
  double se_mean = std::sqrt(var / static_cast<double>(n));
  est.se = est.loss > 0 ? se_mean / (2.0 * est.loss) : std::sqrt(se_mean);
  return est;
}

std::size_t ExperimentReport::accepted() const {
  return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [](const auto& t) { return t.accepted; }));
}

double ExperimentReport::accept_rate() const {
  return trials.empty() ? 0.0 : static_cast<double>(accepted()) / static_cast<double>(trials.size());
}

std::map<std::string, std::size_t> ExperimentReport::reject_counts() const {
  std::map<std::string, std::size_t> out;
  for (const auto& t : trials)
    if (!t.accepted) ++out[t.reason];
  return out;
}

std::optional<double> ExperimentReport::mean_excess() const {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& t : trials)
    if (t.excess) {
      acc += *t.excess;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

std::optional<double> ExperimentReport::p95_excess() const {
  std::vector<double> v;
  for (const auto& t : trials)
    if (t.excess) v.push_back(*t.excess);
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  // Nearest-rank percentile.
  auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

std::size_t ExperimentReport::within_bound_count() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const auto& t) { return t.within_bound.value_or(false); }));
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = config;

  TdsParams params = config.params;
  if (config.derive_kernel_bounds && config.pipeline == Pipeline::kernel) {
    params.A = std::max(1.0, kernel_bound_A(config.kernel, params.R));
    if (const auto* net = std::get_if<NeuralNet>(&config.scenario.target))
      params.B = kernel_bound_B(*net, config.kernel, params.epsilon);
  }
  params.validate();
  report.A = params.A;
  report.B = params.B;

  TrialContext ctx{config, params, labeled_source(config.scenario, config.scenario.train_marginal),
                   marginal_source(config.scenario.test_marginal), std::nullopt};
  if (config.pipeline == Pipeline::moment) {
    bool analytic = config.reference == ReferenceChoice::analytic ||
                    (config.reference == ReferenceChoice::automatic &&
                     has_analytic_moments(config.scenario.train_marginal));
    if (analytic) ctx.reference = reference_moments(config.scenario.train_marginal, config.approx.moment_degree());
  }

  report.trials.resize(config.trials);
  std::vector<json> sizes(config.trials);
  parallel_for(config.trials, [&](std::size_t i) { report.trials[i] = run_trial(ctx, i, &sizes[i]); });
  report.sample_sizes = config.trials > 0 ? sizes.front() : json::object();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

json report_to_json(const ExperimentReport& report) {
  json trials = json::array();
  for (const auto& t : report.trials) {
    trials.push_back(json{{"index", t.index},
                          {"seed", t.seed},
                          {"accepted", t.accepted},
                          {"reason", t.reason},
                          {"detail", t.detail},
                          {"statistic", number_or_string(t.statistic)},
                          {"threshold", number_or_string(t.threshold)},
                          {"test_loss", optional_number(t.test_loss)},
                          {"test_loss_se", optional_number(t.test_loss_se)},
                          {"opt_hat", t.opt_hat},
                          {"lambda_hat", t.lambda_hat},
                          {"bound", t.bound},
                          {"excess", optional_number(t.excess)},
                          {"within_bound", t.within_bound ? json(*t.within_bound) : json(nullptr)}});
  }
  json summary{{"trials", report.trials.size()},
               {"accepted", report.accepted()},
               {"accept_rate", report.accept_rate()},
               {"reject_counts", report.reject_counts()},
               {"mean_excess", optional_number(report.mean_excess())},
               {"p95_excess", optional_number(report.p95_excess())},
               {"within_bound", report.within_bound_count()},
               {"A", report.A},
               {"B", report.B}};
  return json{{"config", config_to_json(report.config)},
              {"sample_sizes", report.sample_sizes},
              {"summary", summary},
              {"trials", trials}};
}

std::string report_json_string(const ExperimentReport& report) { return report_to_json(report).dump(2) + "\n"; }

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "index,seed,accepted,reason,statistic,threshold,test_loss,test_loss_se,opt_hat,lambda_hat,bound,excess,"
         "within_bound\n";
  auto opt = [](const std::optional<double>& v) { return v ? json(*v).dump() : std::string(); };
  for (const auto& t : report.trials) {
    out << t.index << ',' << t.seed << ',' << (t.accepted ? 1 : 0) << ',' << csv_escape(t.reason) << ','
        << number_or_string(t.statistic).dump() << ',' << number_or_string(t.threshold).dump() << ','
        << opt(t.test_loss) << ',' << opt(t.test_loss_se) << ',' << json(t.opt_hat).dump() << ','
        << json(t.lambda_hat).dump() << ',' << json(t.bound).dump() << ',' << opt(t.excess) << ','
        << (t.within_bound ? (*t.within_bound ? "1" : "0") : "") << '\n';
  }
  return out.str();
}

std::string report_text(const ExperimentReport& report) {
  const auto& c = report.config;
  std::ostringstream out;
  out << "experiment " << c.name << " (" << to_string(c.pipeline) << " pipeline, scenario "
      << (c.scenario_id.empty() ? "inline" : c.scenario_id) << ", seed " << c.seed << ")\n";
  out << "trials: " << report.trials.size() << ", accepted: " << report.accepted()
      << ", accept rate: " << fmt(report.accept_rate(), 4) << "\n";
  for (const auto& [reason, count] : report.reject_counts()) out << "  rejected (" << reason << "): " << count << "\n";
  out << "A = " << fmt(report.A) << ", B = " << fmt(report.B) << ", epsilon = " << fmt(c.params.epsilon) << "\n";
  if (auto m = report.mean_excess()) out << "mean excess error: " << fmt(*m) << "\n";
  if (auto p = report.p95_excess()) out << "95th percentile excess error: " << fmt(*p) << "\n";
  if (report.accepted() > 0)
    out << "accepted trials within opt + lambda + 5 eps + 2 se: " << report.within_bound_count() << " of "
        << report.accepted() << "\n";
  out << "wall clock: " << fmt(report.wall_seconds, 4) << " s";
  if (!report.trials.empty()) {
    double total = 0.0;
    for (const auto& t : report.trials) total += t.seconds;
    out << " (mean per trial " << fmt(total / static_cast<double>(report.trials.size()), 4) << " s)";
  }
  out << "\n";
  return out.str();
}

void emit_report(const ExperimentReport& report, const ReportPaths& paths) {
  if (!paths.json.empty()) write_file(paths.json, report_json_string(report));
  if (!paths.csv.empty()) write_file(paths.csv, report_csv(report));
  if (!paths.text.empty()) write_file(paths.text, report_text(report));
}

}  // namespace tds
