#include "tds/moments.hpp"

#include "tds/parallel.hpp"

#include <cmath>
#include <limits>

namespace tds {

namespace {

// Pairwise summation keeps the sum independent of thread count and accurate for large n.
double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 64) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[i];
    return acc;
  }
  std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Univariate moments of the base variable, E[Z^p] for p = 0..deg.
std::vector<double> base_moments_gaussian(int deg, double mean, double scale) {
  std::vector<double> out(static_cast<std::size_t>(deg) + 1);
  for (int p = 0; p <= deg; ++p) out[static_cast<std::size_t>(p)] = gaussian_moment(p, mean, scale);
  return out;
}

// Moments of c + s X from the moments of X.
std::vector<double> affine_moments(const std::vector<double>& base, double shift, double scale) {
  std::vector<double> out(base.size());
  for (std::size_t p = 0; p < base.size(); ++p) {
    double acc = 0.0;
    int ip = static_cast<int>(p);
    for (int k = 0; k <= ip; ++k)
      acc += binomial(ip, k) * std::pow(shift, ip - k) * std::pow(scale, k) * base[static_cast<std::size_t>(k)];
    out[p] = acc;
  }
  return out;
}

}  // namespace

double empirical_moment(const Dataset& data, const MultiIndex& alpha) {
  if (data.empty()) throw ContractError("empirical_moment: empty dataset");
  if (alpha.size() != data.dim()) throw ContractError("empirical_moment: multi-index dimension mismatch");
  std::vector<double> vals(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) vals[i] = monomial(data.x(i), alpha);
  return pairwise_sum(vals.data(), vals.size()) / static_cast<double>(data.size());
}

Vector empirical_moments(const Dataset& data, const MultiIndexSet& set) {
  if (data.empty()) throw ContractError("empirical_moments: empty dataset");
  if (set.dim() != data.dim()) throw ContractError("empirical_moments: multi-index dimension mismatch");
  // Column-major so each monomial's samples are contiguous.
  Matrix design = set.design_matrix(data.features());
  Vector out(static_cast<Eigen::Index>(set.size()));
  const double n = static_cast<double>(data.size());
  parallel_for(set.size(), [&](std::size_t j) {
    auto col = static_cast<Eigen::Index>(j);
    out(col) = pairwise_sum(design.col(col).data(), data.size()) / n;
  });
  return out;
}

double ReferenceMoments::at(const MultiIndex& alpha) const {
  std::size_t pos = set.position(alpha);
  if (pos >= set.size()) throw ContractError("reference moments do not cover the requested multi-index");
  return values(static_cast<Eigen::Index>(pos));
}

double gaussian_moment(int p, double mean, double scale) {
  if (p < 0) throw ContractError("moment order must be nonnegative");
  // E[Z^k] = (k-1)!! for even k, 0 for odd k.
  std::vector<double> z(static_cast<std::size_t>(p) + 1, 0.0);
  z[0] = 1.0;
  for (int k = 2; k <= p; k += 2) z[static_cast<std::size_t>(k)] = z[static_cast<std::size_t>(k - 2)] * (k - 1);
  if (mean == 0.0) return std::pow(scale, p) * z[static_cast<std::size_t>(p)];
  return affine_moments(z, mean, scale)[static_cast<std::size_t>(p)];
}

double uniform_moment(int p, double half_width, double shift, double scale) {
  if (p < 0) throw ContractError("moment order must be nonnegative");
  std::vector<double> u(static_cast<std::size_t>(p) + 1, 0.0);
  for (int k = 0; k <= p; k += 2) u[static_cast<std::size_t>(k)] = std::pow(half_width, k) / (k + 1);
  if (shift == 0.0) return std::pow(scale, p) * u[static_cast<std::size_t>(p)];
  return affine_moments(u, shift, scale)[static_cast<std::size_t>(p)];
}

bool has_analytic_moments(const MarginalSpec& marginal) {
  return std::holds_alternative<Gaussian>(marginal.variant) || std::holds_alternative<UniformCube>(marginal.variant);
}

ReferenceMoments reference_moments(const MarginalSpec& marginal, int max_total_degree) {
  marginal.validate();
  if (!has_analytic_moments(marginal))
    throw ContractError("analytic reference moments need a Gaussian or uniform-cube marginal");
  const auto d = static_cast<Eigen::Index>(marginal.dim);
  // Per-coordinate univariate moment tables for the transformed marginal.
  std::vector<std::vector<double>> table(marginal.dim);
  for (Eigen::Index j = 0; j < d; ++j) {
    double s = marginal.axis_scale ? (*marginal.axis_scale)(j) : 1.0;
    double c = marginal.shift ? (*marginal.shift)(j) : 0.0;
    std::vector<double> base;
    if (const auto* g = std::get_if<Gaussian>(&marginal.variant)) {
      double mu = g->mean.size() ? g->mean(j) : 0.0;
      double sd = g->scale.size() ? g->scale(j) : 1.0;
      base = base_moments_gaussian(max_total_degree, mu, sd);
    } else {
      const auto& cube = std::get<UniformCube>(marginal.variant);
      base.resize(static_cast<std::size_t>(max_total_degree) + 1);
      for (int p = 0; p <= max_total_degree; ++p) base[static_cast<std::size_t>(p)] = uniform_moment(p, cube.half_width);
    }
    table[static_cast<std::size_t>(j)] = affine_moments(base, c, s);
  }
  MultiIndexSet set(marginal.dim, max_total_degree);
  Vector values(static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    double v = 1.0;
    for (std::size_t j = 0; j < marginal.dim; ++j) v *= table[j][static_cast<std::size_t>(set[i][j])];
    values(static_cast<Eigen::Index>(i)) = v;
  }
  return ReferenceMoments{std::move(set), std::move(values), ReferenceMode::analytic, 0};
}

ReferenceMoments reference_moments_empirical(const Dataset& held_out, int max_total_degree) {
  MultiIndexSet set(held_out.dim(), max_total_degree);
  Vector values = empirical_moments(held_out, set);
  return ReferenceMoments{std::move(set), std::move(values), ReferenceMode::empirical, held_out.size()};
}

MomentReport moment_test(const Dataset& test_data, const ReferenceMoments& reference, int max_total_degree,
                         double Delta) {
  if (!(Delta >= 0)) throw ContractError("moment_test: Delta must be nonnegative");
  if (reference.set.dim() != test_data.dim()) throw ContractError("moment_test: reference dimension mismatch");
  if (reference.set.max_total_degree() < max_total_degree)
    throw ContractError("moment_test: reference moments do not cover degree " + std::to_string(max_total_degree));
  MultiIndexSet set(test_data.dim(), max_total_degree);
  Vector empirical = empirical_moments(test_data, set);
  MomentReport report;
  report.Delta = Delta;
  report.degree_checked = max_total_degree;
  report.offending_alpha = set[0];
  for (std::size_t i = 0; i < set.size(); ++i) {
    double dev = std::abs(empirical(static_cast<Eigen::Index>(i)) - reference.at(set[i]));
    if (std::isnan(dev)) dev = std::numeric_limits<double>::infinity();
    if (dev > report.max_abs_deviation) {
      report.max_abs_deviation = dev;
      report.offending_alpha = set[i];
    }
  }
  report.passed = report.max_abs_deviation <= Delta;
  return report;
}

std::string to_string(ReferenceMode mode) { return mode == ReferenceMode::analytic ? "analytic" : "empirical"; }

void to_json(nlohmann::json& j, const MomentReport& r) {
  j = nlohmann::json{{"max_abs_deviation", std::isfinite(r.max_abs_deviation) ? nlohmann::json(r.max_abs_deviation)
                                                                               : nlohmann::json("inf")},
                     {"offending_alpha", r.offending_alpha},
                     {"Delta", std::isfinite(r.Delta) ? nlohmann::json(r.Delta) : nlohmann::json("inf")},
                     {"degree_checked", r.degree_checked},
                     {"passed", r.passed}};
}

}  // namespace tds
