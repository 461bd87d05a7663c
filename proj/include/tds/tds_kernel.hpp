#pragma once

#include "tds/core.hpp"
#include "tds/kernels.hpp"
#include "tds/scenarios.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace tds {

struct RadiusCheck {
  bool passed = true;
  std::optional<std::size_t> violating_index;
  double violating_norm = 0.0;
};

/// Passes iff every ||x||_2 <= R; otherwise reports the first violator.
RadiusCheck radius_check(const Dataset& data, double R);

struct ConstrainedFit {
  Vector coeffs;
  double objective = 0.0;  // sum of squared residuals
  double norm_sq = 0.0;    // a^T K a
  double multiplier = 0.0; // Lagrange multiplier; 0 when the constraint is inactive
};

/// min ||y - K a||^2 subject to a^T K a <= B for a PSD Gram matrix K.
///
/// Walks the path a(mu) = (K + mu I)^+ y restricted to the range of K
/// (eigenvalues below 1e-12 * lambda_max are dropped). If a(0) is feasible
/// it is returned; otherwise mu is bisected until a(mu)^T K a(mu) meets B
/// from below. Throws NumericalError when K has an eigenvalue below
/// -1e-8 * lambda_max.
ConstrainedFit solve_constrained_gram(const Matrix& K, const Vector& y, double B);

/// Coefficient vector over the rows of S_ref.
Vector fit_constrained_kernel_regression(const Dataset& S_ref, const KernelSpec& spec, double B);

/// phi(x) = (K(x, z))_z over a fixed anchor set.
class ReferenceFeatureMap {
 public:
  ReferenceFeatureMap(PointMatrix anchors, KernelSpec spec);

  std::size_t size() const { return static_cast<std::size_t>(anchors_.rows()); }
  const PointMatrix& anchors() const { return anchors_; }
  const KernelSpec& spec() const { return spec_; }

  Vector operator()(const Vector& x) const;
  /// Row i holds phi(points_i)^T.
  Matrix features(const PointMatrix& points) const;

 private:
  PointMatrix anchors_;
  KernelSpec spec_;
};

/// (1/N) sum_x phi(x) phi(x)^T over the rows of S_ver.
Matrix empirical_second_moment(const ReferenceFeatureMap& fmap, const Dataset& S_ver);

struct SpectralReport {
  double rho = 0.0;  // +infinity on a null-space violation
  double threshold = 0.0;
  bool null_violation = false;
  double eig_tolerance = 1e-10;
  double null_tolerance = 1e-8;
  std::size_t matrix_dim = 0;
  std::size_t rank = 0;  // numerical rank of Phi_hat
};

inline constexpr double kEigToleranceRel = 1e-10;
inline constexpr double kNullToleranceRel = 1e-8;

/// max a^T Phi' a subject to a^T Phi a <= 1.
///
/// Directions of Phi with eigenvalue at most eig_tolerance_rel * lambda_max
/// form its numerical null space. If Phi' has a Rayleigh quotient above
/// null_tolerance_rel * trace(Phi') on that space, the maximum is unbounded
/// and rho is +infinity. Otherwise rho is the top eigenvalue of Phi' whitened
/// on the range of Phi. The threshold field is left at zero.
SpectralReport spectral_shift_statistic(const Matrix& phi, const Matrix& phi_prime,
                                        double eig_tolerance_rel = kEigToleranceRel,
                                        double null_tolerance_rel = kNullToleranceRel);

/// 1 + eps^2 / (50 A B).
double spectral_threshold(const TdsParams& params);

/// x -> cl_M(sum_z a_z K(z, x)).
class KernelHypothesis : public Predictor {
 public:
  KernelHypothesis(PointMatrix anchors, Vector coeffs, KernelSpec spec, double M);

  double operator()(const Vector& x) const override;
  /// The unclipped kernel expansion.
  double raw(const Vector& x) const;
  std::string describe() const override;

  const PointMatrix& anchors() const { return anchors_; }
  const Vector& coeffs() const { return coeffs_; }
  const KernelSpec& spec() const { return spec_; }
  double clip_level() const { return M_; }

 private:
  PointMatrix anchors_;
  Vector coeffs_;
  KernelSpec spec_;
  double M_;
};

struct KernelSampleSizes {
  std::size_t m = 0;
  std::size_t N = 0;
  // Values of the sample-complexity formulas with c = 1, always reported.
  double strict_m = 0.0;
  double strict_N = 0.0;
  ScaleMode mode = ScaleMode::desk;
};

/// Strict caps; beyond them strict mode refuses to run.
inline constexpr double kStrictMaxM = 20000;
inline constexpr double kStrictMaxN = 5e6;

/// m = (ABM)^4 / eps^4 log(1/delta), N = m^2 (ABC/eps^4) (4C log(4/delta))^(4 ell + 1)
/// in strict mode (rounded up, ContractError past the caps); desk_m, desk_n otherwise.
KernelSampleSizes kernel_sample_sizes(const TdsParams& params);

struct KernelRunResult {
  TdsOutcome outcome;
  KernelSampleSizes sizes;
  std::optional<SpectralReport> spectral;
  std::optional<RadiusCheck> radius;  // set when a radius check failed
  std::optional<double> reference_loss;  // ||y - p_hat||_{S_ref}, unclipped
  std::optional<double> reference_norm_sq;
};

/// Kernel pipeline. Draw phases use independent substreams of `seed`:
/// 1 reference train, 2 reference test, 3 verification train, 4 verification test.
KernelRunResult tds_kernel_learn(const Source& train, const Source& test_unlabeled, const KernelSpec& spec,
                                 const TdsParams& params, std::uint64_t seed);

void to_json(nlohmann::json& j, const SpectralReport& r);
void to_json(nlohmann::json& j, const KernelSampleSizes& s);

}  // namespace tds
