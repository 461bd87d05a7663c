#include "tds/polyapprox.hpp"

#include "tds/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tds {

ChebyshevApprox::ChebyshevApprox(double radius, std::vector<double> coeffs)
    : radius_(radius), coeffs_(std::move(coeffs)) {
  if (!(radius_ > 0) || !std::isfinite(radius_)) throw ContractError("ChebyshevApprox: radius must be positive");
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

double ChebyshevApprox::operator()(double x) const {
  const double t = x / radius_;
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t j = coeffs_.size() - 1; j >= 1; --j) {
    double b0 = 2.0 * t * b1 - b2 + coeffs_[j];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + coeffs_[0];
}

DensePolynomial ChebyshevApprox::monomial() const {
  const int n = degree();
  if (n > kMonomialDegreeCap)
    throw RangeError("monomial export is capped at degree " + std::to_string(kMonomialDegreeCap));
  // Coefficients of T_j(t) in powers of t, by T_{j+1} = 2t T_j - T_{j-1}.
  std::vector<long double> acc(static_cast<std::size_t>(n) + 1, 0.0L);
  std::vector<long double> prev{1.0L}, cur{0.0L, 1.0L};
  acc[0] += static_cast<long double>(coeffs_[0]);
  if (n >= 1) acc[1] += static_cast<long double>(coeffs_[1]);
  for (int j = 2; j <= n; ++j) {
    std::vector<long double> next(static_cast<std::size_t>(j) + 1, 0.0L);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += 2.0L * cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= prev[i];
    for (std::size_t i = 0; i < next.size(); ++i) acc[i] += static_cast<long double>(coeffs_[static_cast<std::size_t>(j)]) * next[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  // Substitute t = x / R.
  std::vector<double> out(acc.size());
  long double scale = 1.0L;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out[i] = static_cast<double>(acc[i] / scale);
    scale *= static_cast<long double>(radius_);
  }
  return DensePolynomial::univariate(out);
}

namespace {

/// Chebyshev coefficients of the degree n-1 interpolant at n Gauss nodes.
std::vector<double> gauss_interpolation_coeffs(const UnivariateFn& f, double R, std::size_t n) {
  std::vector<double> values(n);
  const double pi = std::numbers::pi;
  for (std::size_t k = 0; k < n; ++k) {
    double theta = pi * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    double v = f(R * std::cos(theta));
    if (!std::isfinite(v)) throw ContractError("chebyshev_approx_univariate: f is not finite on [-R, R]");
    values[k] = v;
  }
  std::vector<double> c(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
      double theta = pi * static_cast<double>(j) * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      s += static_cast<long double>(values[k]) * std::cos(theta);
    }
    c[j] = static_cast<double>(2.0L * s / static_cast<long double>(n));
  }
  c[0] *= 0.5;
  return c;
}

double floor_one(double v) { return std::max(1.0, v); }

}  // namespace

ChebyshevApprox chebyshev_approx_univariate(const UnivariateFn& f, double R, int degree, ChebyshevMethod method) {
  if (degree < 0) throw ContractError("chebyshev_approx_univariate: degree must be >= 0");
  if (!(R > 0)) throw ContractError("chebyshev_approx_univariate: R must be positive");
  const auto n = static_cast<std::size_t>(degree) + 1;
  if (method == ChebyshevMethod::interpolation) return ChebyshevApprox(R, gauss_interpolation_coeffs(f, R, n));
  std::size_t resolution = std::max<std::size_t>(512, 4 * n);
  auto full = gauss_interpolation_coeffs(f, R, resolution);
  full.resize(n);
  return ChebyshevApprox(R, std::move(full));
}

SupError grid_sup_error(const UnivariateFn& p, const UnivariateFn& f, double R, std::size_t n_points,
                        std::size_t n_cheb) {
  if (n_points < 2) throw ContractError("grid_sup_error: need at least 2 grid points");
  SupError out{0.0, Vector::Zero(1)};
  auto visit = [&](double x) {
    double e = std::abs(p(x) - f(x));
    if (!(e <= out.value)) {  // NaN propagates as an infinite error
      out.value = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
      out.argmax(0) = x;
    }
  };
  for (std::size_t i = 0; i < n_points; ++i)
    visit(-R + 2.0 * R * static_cast<double>(i) / static_cast<double>(n_points - 1));
  if (n_cheb >= 2)
    for (std::size_t k = 0; k < n_cheb; ++k)
      visit(R * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_cheb - 1)));
  return out;
}

SupError ball_sup_error(const Evaluator& p, const Evaluator& f, std::size_t dim, double R, std::size_t n_samples,
                        std::uint64_t seed) {
  if (n_samples < 2) throw ContractError("ball_sup_error: need at least 2 samples");
  Rng rng = substream(seed, 0xba11);
  SupError out{0.0, Vector::Zero(static_cast<Eigen::Index>(dim))};
  for (std::size_t i = 0; i < n_samples; ++i) {
    Vector x = uniform_ball_point(static_cast<Eigen::Index>(dim), R, rng);
    double e = std::abs(p(x) - f(x));
    if (!(e <= out.value)) {
      out.value = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
      out.argmax = x;
    }
  }
  return out;
}

int degree_for_target(const UnivariateFn& f, double R, double eps, int max_degree, ChebyshevMethod method) {
  if (!(eps > 0)) throw ContractError("degree_for_target: eps must be positive");
  if (max_degree < 1) throw NotReachable(max_degree);
  auto meets = [&](int deg) {
    auto q = chebyshev_approx_univariate(f, R, deg, method);
    return grid_sup_error(q, f, R).value <= eps;
  };
  int lo = 0;  // largest degree known to fail (0 is never tested)
  int hi = -1;
  for (int deg = 1;; deg *= 2) {
    int probe = std::min(deg, max_degree);
    if (meets(probe)) {
      hi = probe;
      break;
    }
    lo = probe;
    if (probe == max_degree) throw NotReachable(max_degree);
  }
  while (hi - lo > 1) {
    int mid = lo + (hi - lo) / 2;
    if (meets(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

CoeffBounds coeff_bounds(const DensePolynomial& p) {
  CoeffBounds b;
  for (const auto& [alpha, c] : p.coeffs()) {
    b.l1 += std::abs(c);
    b.l2_sq += c * c;
  }
  return b;
}

void to_json(nlohmann::json& j, const ApproxCertificate& c) {
  j = nlohmann::json{{"radius", c.radius},
                     {"target_eps", c.target_eps},
                     {"measured_sup_error", c.measured_sup_error},
                     {"degree", c.degree},
                     {"coeff_l1", c.coeff_l1 ? nlohmann::json(*c.coeff_l1) : nlohmann::json()},
                     {"coeff_l2_sq", c.coeff_l2_sq ? nlohmann::json(*c.coeff_l2_sq) : nlohmann::json()},
                     {"scaling_constant", c.scaling_constant}};
}

UnivariateCertified certify_univariate(const UnivariateFn& f, double R, double eps, int max_degree) {
  int deg = degree_for_target(f, R, eps, max_degree);
  auto q = chebyshev_approx_univariate(f, R, deg);
  ApproxCertificate cert;
  cert.radius = R;
  cert.target_eps = eps;
  cert.measured_sup_error = grid_sup_error(q, f, R).value;
  cert.degree = deg;
  if (deg <= kMonomialDegreeCap) {
    auto b = coeff_bounds(q.monomial());
    cert.coeff_l1 = b.l1;
    cert.coeff_l2_sq = b.l2_sq;
  }
  cert.scaling_constant = deg / floor_one(R * std::log(R / eps));
  return {std::move(q), cert};
}

namespace {

/// sum_j w2_j q(w1_j . x) expanded in monomials.
std::optional<DensePolynomial> expand_depth_two(const NeuralNet& net, const ChebyshevApprox& q, std::size_t cap) {
  const std::size_t d = net.input_dim();
  if (q.degree() > kMonomialDegreeCap || MultiIndexSet::count(d, q.degree()) > cap) return std::nullopt;
  const auto qm = q.monomial();
  const Matrix& w1 = net.weights()[0];
  const Matrix& w2 = net.weights()[1];
  DensePolynomial total(d);
  for (Eigen::Index j = 0; j < w1.rows(); ++j) {
    DensePolynomial lin = DensePolynomial::linear(w1.row(j).transpose());
    DensePolynomial power = DensePolynomial::constant(d, 1.0);
    DensePolynomial unit(d);
    for (int k = 0; k <= q.degree(); ++k) {
      double c = qm.coeff({k});
      if (c != 0.0) unit = unit + power * c;
      if (k < q.degree()) power = power * lin;
    }
    total = total + unit * w2(0, j);
  }
  return total;
}

}  // namespace

ComposedNetApprox compose_sigmoid_net_approx(const NeuralNet& net, double eps, double R,
                                             const ComposeOptions& options) {
  if (net.activation().kind() != ActivationKind::Sigmoid)
    throw ContractError("compose_sigmoid_net_approx: net must use sigmoid activations");
  if (net.depth() < 2) throw ContractError("compose_sigmoid_net_approx: depth must be >= 2");
  if (!(eps > 0) || !(R > 0)) throw ContractError("compose_sigmoid_net_approx: eps and R must be positive");

  const auto norms = net_norms(net);
  const std::size_t t = net.depth();
  const double W = norms.w_sum_l1;
  const double first_radius = std::max(R * norms.w1_two_inf, 1e-12);
  const double inner_radius = std::max(2.0 * W, 1e-12);
  UnivariateFn sig = [](double v) { return sigmoid(v); };

  double layer_target = eps / std::pow(std::max(2.0 * W, 1e-300), static_cast<double>(t));
  layer_target = std::min(layer_target, eps);
  for (int attempt = 0; attempt <= options.max_refinements; ++attempt, layer_target *= 0.5) {
    std::vector<ChebyshevApprox> layers;
    std::vector<int> degrees;
    for (std::size_t i = 1; i < t; ++i) {
      double radius = i == 1 ? first_radius : inner_radius;
      int deg = degree_for_target(sig, radius, layer_target, options.max_degree);
      layers.push_back(chebyshev_approx_univariate(sig, radius, deg));
      degrees.push_back(deg);
    }
    auto weights = net.weights();
    Evaluator evaluator = [weights, layers](const Vector& x) {
      Vector p = weights[0] * x;
      for (std::size_t i = 1; i < weights.size(); ++i) {
        const auto& q = layers[i - 1];
        p = weights[i] * p.unaryExpr([&q](double v) { return q(v); });
      }
      return p(0);
    };
    Evaluator target = [&net](const Vector& x) { return net(x); };
    auto measured = ball_sup_error(evaluator, target, net.input_dim(), R, options.n_samples, options.seed);
    if (measured.value > eps) continue;

    ComposedNetApprox out;
    out.evaluator = evaluator;
    out.degree_vector = degrees;
    out.layers = layers;
    out.layer_target = layer_target;
    auto& cert = out.certificate;
    cert.radius = R;
    cert.target_eps = eps;
    cert.measured_sup_error = measured.value;
    cert.degree = 1;
    for (int d : degrees) cert.degree *= d;
    if (t == 2) {
      out.polynomial = expand_depth_two(net, layers.front(), options.expansion_cap);
      if (out.polynomial) {
        auto b = coeff_bounds(*out.polynomial);
        cert.coeff_l1 = b.l1;
        cert.coeff_l2_sq = b.l2_sq;
      }
    }
    double tl = static_cast<double>(t);
    double scale = floor_one(R * std::log(R)) * floor_one(norms.w1_two_inf * std::pow(W, tl - 2.0)) *
                   std::pow(tl * floor_one(std::log(W / eps)), tl - 1.0);
    cert.scaling_constant = cert.degree / scale;
    return out;
  }
  throw NumericalError("compose_sigmoid_net_approx: measured error stays above eps after refinement");
}

double GrowthEnvelope::log_value(double s) const {
  double kk = static_cast<double>(k), l = static_cast<double>(ell);
  return std::log(r + eps) + 3.0 * l * std::log(2.0 * (kk + l)) + 0.5 * l * std::log(kk) + l * std::log(s / R);
}

double GrowthEnvelope::operator()(double s) const { return std::exp(log_value(s)); }

GrowthEnvelope out_of_radius_bound(double r, double eps, double R, int k, int ell) {
  if (!(R > 0) || k < 1 || ell < 0 || r < 0 || eps < 0) throw ContractError("out_of_radius_bound: invalid arguments");
  return GrowthEnvelope{r, eps, R, k, ell};
}

EnvelopeCheck check_envelope(const Evaluator& p, std::size_t dim, const GrowthEnvelope& envelope,
                             std::size_t n_samples, std::uint64_t seed, double radius_factor) {
  Rng rng = substream(seed, 0xe7e1);
  std::uniform_real_distribution<double> radius(envelope.R, radius_factor * envelope.R);
  EnvelopeCheck out;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Vector dir = uniform_ball_point(static_cast<Eigen::Index>(dim), 1.0, rng);
    while (dir.norm() == 0.0) dir = uniform_ball_point(static_cast<Eigen::Index>(dim), 1.0, rng);
    double s = radius(rng);
    Vector x = dir.normalized() * s;
    double value = std::abs(p(x));
    double ratio = value == 0.0 ? 0.0 : std::exp(std::log(value) - envelope.log_value(x.norm()));
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (value != 0.0 && !(std::log(value) <= envelope.log_value(x.norm()))) out.passed = false;
    ++out.samples;
  }
  return out;
}

UnivariateFn named_function(const std::string& name) {
  if (name == "sigmoid") return [](double v) { return sigmoid(v); };
  if (name == "relu") return [](double v) { return v > 0 ? v : 0.0; };
  if (name == "identity") return [](double v) { return v; };
  if (name == "square") return [](double v) { return v * v; };
  if (name == "tanh") return [](double v) { return std::tanh(v); };
  throw ContractError("unknown function name: " + name);
}

}  // namespace tds
