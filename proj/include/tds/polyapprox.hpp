#pragma once

#include "tds/core.hpp"
#include "tds/nets.hpp"
#include "tds/polynomial.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tds {

using UnivariateFn = std::function<double(double)>;

/// Above this degree, monomial coefficients are not exported.
inline constexpr int kMonomialDegreeCap = 64;

enum class ChebyshevMethod {
  /// Interpolation at the degree+1 Chebyshev-Gauss nodes.
  interpolation,
  /// Series coefficients from a high-resolution interpolant, truncated to the
  /// requested degree. Higher degrees only add terms.
  truncated_series,
};

/// Polynomial on [-R, R] stored as sum_j c_j T_j(x / R).
class ChebyshevApprox {
 public:
  ChebyshevApprox(double radius, std::vector<double> coeffs);

  double radius() const { return radius_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<double>& chebyshev_coeffs() const { return coeffs_; }

  /// Clenshaw recurrence; valid for any real x.
  double operator()(double x) const;

  /// Monomial-basis coefficients in x, converted with long double
  /// accumulation. Throws RangeError above kMonomialDegreeCap.
  DensePolynomial monomial() const;

 private:
  double radius_;
  std::vector<double> coeffs_;
};

ChebyshevApprox chebyshev_approx_univariate(const UnivariateFn& f, double R, int degree,
                                            ChebyshevMethod method = ChebyshevMethod::interpolation);

struct SupError {
  double value = 0.0;
  Vector argmax;
};

inline constexpr std::size_t kDefaultGridPoints = 10'000;
inline constexpr std::size_t kDefaultChebyshevNodes = 1'000;
inline constexpr std::size_t kDefaultBallSamples = 10'000;

/// max |p - f| over an equispaced grid of n_points on [-R, R] plus
/// n_cheb Chebyshev-Lobatto points.
SupError grid_sup_error(const UnivariateFn& p, const UnivariateFn& f, double R,
                        std::size_t n_points = kDefaultGridPoints, std::size_t n_cheb = kDefaultChebyshevNodes);

/// max |p - f| over n_samples uniform points of the radius-R ball in R^dim.
/// A Monte-Carlo lower bound on the true sup.
SupError ball_sup_error(const Evaluator& p, const Evaluator& f, std::size_t dim, double R,
                        std::size_t n_samples = kDefaultBallSamples, std::uint64_t seed = 0);

class NotReachable : public std::runtime_error {
 public:
  explicit NotReachable(int max_degree)
      : std::runtime_error("no degree <= " + std::to_string(max_degree) + " reaches the target error"),
        max_degree_(max_degree) {}
  int max_degree() const { return max_degree_; }

 private:
  int max_degree_;
};

/// Smallest tested degree whose grid sup error is <= eps: doubling from 1,
/// then bisection inside the last bracket.
int degree_for_target(const UnivariateFn& f, double R, double eps, int max_degree,
                      ChebyshevMethod method = ChebyshevMethod::interpolation);

struct CoeffBounds {
  double l1 = 0.0;
  double l2_sq = 0.0;
};

CoeffBounds coeff_bounds(const DensePolynomial& p);

struct ApproxCertificate {
  double radius = 0.0;
  double target_eps = 0.0;
  double measured_sup_error = 0.0;
  int degree = 0;
  /// Absent when the monomial expansion was not materialized.
  std::optional<double> coeff_l1;
  std::optional<double> coeff_l2_sq;
  /// degree / (R * log(R / eps)) for univariate certificates;
  /// degree / scaling term of the composed construction otherwise.
  double scaling_constant = 0.0;
};

void to_json(nlohmann::json& j, const ApproxCertificate& c);

/// Builds a Chebyshev approximant of the smallest degree meeting eps and
/// certifies it by grid measurement.
struct UnivariateCertified {
  ChebyshevApprox approx;
  ApproxCertificate certificate;
};
UnivariateCertified certify_univariate(const UnivariateFn& f, double R, double eps, int max_degree = 256);

struct ComposeOptions {
  int max_degree = 256;
  std::size_t n_samples = kDefaultBallSamples;
  std::uint64_t seed = 0;
  /// Attempts that halve the per-layer target when the measured error misses eps.
  int max_refinements = 6;
  /// Cap on monomials when expanding a depth-2 approximant.
  std::size_t expansion_cap = 200'000;
};

struct ComposedNetApprox {
  Evaluator evaluator;
  /// (deg q_1, ..., deg q_{t-1}).
  std::vector<int> degree_vector;
  ApproxCertificate certificate;
  std::vector<ChebyshevApprox> layers;
  double layer_target = 0.0;
  /// Monomial expansion, materialized for depth-2 nets when small enough.
  std::optional<DensePolynomial> polynomial;
};

/// Layer-wise approximant p_i = W_i q_{i-1}(p_{i-1}), p_1 = W_1 x, with q_1
/// fitted on radius R ||W_1||_{2,inf} and later q_i on radius 2W, each to
/// accuracy eps / (2W)^t. The certificate is re-measured against the net
/// on the radius-R ball.
ComposedNetApprox compose_sigmoid_net_approx(const NeuralNet& net, double eps, double R,
                                             const ComposeOptions& options = {});

/// Upper envelope s -> (r + eps)(2(k + ell))^(3 ell) k^(ell/2) (s / R)^ell for
/// an (eps, R)-uniform approximant of degree ell in k variables of a
/// function bounded by r on the ball.
struct GrowthEnvelope {
  double r = 0.0;
  double eps = 0.0;
  double R = 1.0;
  int k = 1;
  int ell = 0;

  double log_value(double s) const;
  double operator()(double s) const;
};

GrowthEnvelope out_of_radius_bound(double r, double eps, double R, int k, int ell);

struct EnvelopeCheck {
  bool passed = true;
  /// max |p(x)| / envelope(||x||) over the samples.
  double worst_ratio = 0.0;
  std::size_t samples = 0;
};

/// Samples points with ||x||_2 uniform in [R, radius_factor * R] and checks |p| <= envelope.
EnvelopeCheck check_envelope(const Evaluator& p, std::size_t dim, const GrowthEnvelope& envelope,
                             std::size_t n_samples, std::uint64_t seed, double radius_factor = 3.0);

/// Univariate functions addressable by name: sigmoid, relu, identity, square, tanh.
UnivariateFn named_function(const std::string& name);

}  // namespace tds
