#pragma once

#include "tds/core.hpp"
#include "tds/moments.hpp"
#include "tds/polynomial.hpp"
#include "tds/scenarios.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace tds {

struct UniformApproxParams {
  int ell = 2;           // regression degree
  int t_mom = 2;         // moments are checked up to 2 max(ell, t_mom)
  double B_coef = 1e3;   // coefficient box
  double Delta = 0.1;    // moment tolerance
  double eps_prime = 0.0;
  double r = 1.0;
  int k = 1;
  double R = 1.0;
  std::size_t m_train = 10000;
  std::size_t m_test = 10000;
  double eps_obj = 1e-12;
  std::size_t max_iter = 100000;
  ScaleMode mode = ScaleMode::desk;
  bool delta_underflow = false;  // strict Delta is below the smallest normal double

  int moment_degree() const { return 2 * std::max(ell, t_mom); }
  void validate() const;
};

/// eps' = eps/11, t = ceil(2 ln(2M/eps')), B = r (2(k+ell))^(3 ell),
/// Delta = eps'^2 / (4 B^2 d^(2 ell t)); the objective tolerance is eps'^2.
UniformApproxParams strict_uniform_approx_params(double epsilon, double M, double r, int k, double R, std::size_t d,
                                                 int ell);

struct PolyFit {
  DensePolynomial poly;
  Vector coeffs;  // in MultiIndexSet(d, ell) order
  double objective = 0.0;  // mean squared residual
  std::size_t iterations = 0;
  bool converged = false;
};

/// Feature count above which the monomial design is refused.
inline constexpr std::size_t kPolyFeatureCap = 20000;

/// min mean (y - p(x))^2 over degree-ell polynomials with every coefficient
/// in [-B, B], by projected gradient from zero with step 1/L, L = 2 lambda_max
/// of the design Gram. Stops once the objective falls by less than eps_obj over
/// 50 iterations, or after max_iter iterations.
PolyFit fit_constrained_poly_regression(const Dataset& S, int ell, double B_coef, double eps_obj = 1e-12,
                                        std::size_t max_iter = 100000);

/// x -> cl_M(p(x)).
class PolynomialHypothesis : public Predictor {
 public:
  PolynomialHypothesis(DensePolynomial p, double M);
  double operator()(const Vector& x) const override;
  std::string describe() const override;
  const DensePolynomial& polynomial() const { return p_; }

 private:
  DensePolynomial p_;
  double M_;
};

struct MomentRunResult {
  TdsOutcome outcome;
  MomentReport moments;
  ReferenceMode reference_mode = ReferenceMode::analytic;
  std::size_t reference_size = 0;
  double effective_Delta = 0.0;
  std::optional<double> train_objective;
  std::size_t iterations = 0;
};

/// Moment-matching pipeline. Phases: 1 labeled train draw, 2 test draw, 3 held-out
/// reference draw (empirical mode only, 10x the test size, with tolerance
/// 1.5 Delta to budget for the second estimate).
MomentRunResult tds_uniform_learn(const Source& train, const Source& test_unlabeled,
                                  const std::optional<ReferenceMoments>& reference,
                                  const UniformApproxParams& approx, const TdsParams& params, std::uint64_t seed);

void to_json(nlohmann::json& j, const UniformApproxParams& a);
void from_json(const nlohmann::json& j, UniformApproxParams& a);

}  // namespace tds
