#include "tds/tds_kernel.hpp"

#include "tds/parallel.hpp"
#include "tds/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tds {

namespace {

constexpr double kPinvCutoff = 1e-12;
constexpr double kPsdTolerance = 1e-8;
constexpr double kSymmetryTolerance = 1e-10;

void check_symmetric(const Matrix& a, const char* name) {
  double scale = a.cwiseAbs().maxCoeff();
  double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * std::max(scale, std::numeric_limits<double>::min()) && asym > 0)
    throw ContractError(std::string(name) + " is not symmetric");
}

}  // namespace

RadiusCheck radius_check(const Dataset& data, double R) {
  const auto& x = data.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double n = x.row(i).norm();
    if (n > R) return RadiusCheck{false, static_cast<std::size_t>(i), n};
  }
  return {};
}

ConstrainedFit solve_constrained_gram(const Matrix& K, const Vector& y, double B) {
  if (K.rows() != K.cols() || K.rows() != y.size()) throw ContractError("Gram matrix and labels disagree in size");
  if (!(B > 0)) throw ContractError("norm bound B must be positive");
  ConstrainedFit fit;
  fit.coeffs = Vector::Zero(y.size());
  fit.objective = y.squaredNorm();
  if (K.rows() == 0) return fit;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (K + K.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("Gram eigendecomposition failed");
  const Vector& lam = eig.eigenvalues();
  const Matrix& Q = eig.eigenvectors();
  double lmax = lam.maxCoeff();
  if (lmax <= 0) return fit;
  if (lam.minCoeff() < -kPsdTolerance * lmax)
    throw NumericalError("Gram matrix is not positive semidefinite (min eigenvalue " + std::to_string(lam.minCoeff()) +
                         ")");

  Vector yt = Q.transpose() * y;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > kPinvCutoff * lmax) keep.push_back(i);

  auto norm_sq = [&](double mu) {
    double acc = 0.0;
    for (auto i : keep) {
      double c = yt(i) / (lam(i) + mu);
      acc += lam(i) * c * c;
    }
    return acc;
  };

  double mu = 0.0;
  if (norm_sq(0.0) > B) {
    double weighted = 0.0;
    for (auto i : keep) weighted += lam(i) * yt(i) * yt(i);
    double lo = 0.0;
    double hi = std::sqrt(weighted / B);
    while (norm_sq(hi) > B) hi *= 2;  // guards rounding in the analytic bound
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      double mid = 0.5 * (lo + hi);
      if (norm_sq(mid) > B)
        lo = mid;
      else
        hi = mid;
    }
    mu = hi;
  }

  Vector c = Vector::Zero(y.size());
  for (auto i : keep) c(i) = yt(i) / (lam(i) + mu);
  fit.coeffs = Q * c;
  fit.multiplier = mu;
  fit.norm_sq = norm_sq(mu);
  Vector resid = y - K * fit.coeffs;
  fit.objective = resid.squaredNorm();
  return fit;
}

Vector fit_constrained_kernel_regression(const Dataset& S_ref, const KernelSpec& spec, double B) {
  GramMatrix K = gram_matrix(S_ref.features(), spec);
  return solve_constrained_gram(K.values, S_ref.labels(), B).coeffs;
}

ReferenceFeatureMap::ReferenceFeatureMap(PointMatrix anchors, KernelSpec spec)
    : anchors_(std::move(anchors)), spec_(std::move(spec)) {
  spec_.validate();
  if (anchors_.rows() == 0) throw ContractError("feature map needs at least one anchor");
}

Vector ReferenceFeatureMap::operator()(const Vector& x) const {
  if (x.size() != anchors_.cols()) throw ContractError("feature map: dimension mismatch");
  Vector phi(anchors_.rows());
  for (Eigen::Index i = 0; i < anchors_.rows(); ++i) phi(i) = cmk_from_inner(anchors_.row(i).dot(x), spec_);
  return phi;
}

Matrix ReferenceFeatureMap::features(const PointMatrix& points) const { return kernel_matrix(points, anchors_, spec_); }

Matrix empirical_second_moment(const ReferenceFeatureMap& fmap, const Dataset& S_ver) {
  if (S_ver.empty()) throw ContractError("empirical_second_moment: empty verification set");
  Matrix F = fmap.features(S_ver.features());
  Matrix phi = Matrix::Zero(F.cols(), F.cols());
  phi.selfadjointView<Eigen::Lower>().rankUpdate(F.transpose(), 1.0 / static_cast<double>(F.rows()));
  phi.triangularView<Eigen::StrictlyUpper>() = phi.transpose();
  return phi;
}

SpectralReport spectral_shift_statistic(const Matrix& phi, const Matrix& phi_prime, double eig_tolerance_rel,
                                        double null_tolerance_rel) {
  if (phi.rows() != phi.cols() || phi_prime.rows() != phi_prime.cols() || phi.rows() != phi_prime.rows())
    throw ContractError("spectral statistic: matrices must be square and of equal size");
  check_symmetric(phi, "Phi_hat");
  check_symmetric(phi_prime, "Phi_hat'");
  SpectralReport report;
  report.eig_tolerance = eig_tolerance_rel;
  report.null_tolerance = null_tolerance_rel;
  report.matrix_dim = static_cast<std::size_t>(phi.rows());
  if (phi.rows() == 0) return report;

  Matrix sym = 0.5 * (phi + phi.transpose());
  Matrix sym_prime = 0.5 * (phi_prime + phi_prime.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of Phi_hat failed");
  const Vector& lam = eig.eigenvalues();
  const Matrix& V = eig.eigenvectors();
  double lmax = std::max(lam.maxCoeff(), 0.0);
  double cutoff = eig_tolerance_rel * lmax;

  std::vector<Eigen::Index> range, null;
  for (Eigen::Index i = 0; i < lam.size(); ++i) (lam(i) > cutoff && lam(i) > 0 ? range : null).push_back(i);
  report.rank = range.size();

  if (!null.empty()) {
    Matrix Vn(V.rows(), static_cast<Eigen::Index>(null.size()));
    for (std::size_t j = 0; j < null.size(); ++j) Vn.col(static_cast<Eigen::Index>(j)) = V.col(null[j]);
    Matrix restricted = Vn.transpose() * sym_prime * Vn;
    double worst = Eigen::SelfAdjointEigenSolver<Matrix>(restricted, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    double trace = sym_prime.trace();
    if (worst > null_tolerance_rel * std::max(trace, 0.0) && worst > 0) {
      report.null_violation = true;
      report.rho = std::numeric_limits<double>::infinity();
      return report;
    }
  }
  if (range.empty()) return report;

  Matrix W(V.rows(), static_cast<Eigen::Index>(range.size()));
  for (std::size_t j = 0; j < range.size(); ++j)
    W.col(static_cast<Eigen::Index>(j)) = V.col(range[j]) / std::sqrt(lam(range[j]));
  Matrix whitened = W.transpose() * sym_prime * W;
  whitened = 0.5 * (whitened + whitened.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> top(whitened, Eigen::EigenvaluesOnly);
  if (top.info() != Eigen::Success) throw NumericalError("whitened eigenproblem failed");
  report.rho = std::max(top.eigenvalues().maxCoeff(), 0.0);
  return report;
}

double spectral_threshold(const TdsParams& params) {
  return 1.0 + params.epsilon * params.epsilon / (50.0 * params.A * params.B);
}

KernelHypothesis::KernelHypothesis(PointMatrix anchors, Vector coeffs, KernelSpec spec, double M)
    : anchors_(std::move(anchors)), coeffs_(std::move(coeffs)), spec_(std::move(spec)), M_(M) {
  if (anchors_.rows() != coeffs_.size()) throw ContractError("hypothesis: one coefficient per anchor required");
  if (!(M_ > 0)) throw ContractError("hypothesis: clip level must be positive");
}

double KernelHypothesis::raw(const Vector& x) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < anchors_.rows(); ++i) acc += coeffs_(i) * cmk_from_inner(anchors_.row(i).dot(x), spec_);
  return acc;
}

double KernelHypothesis::operator()(const Vector& x) const { return clip(raw(x), M_); }

std::string KernelHypothesis::describe() const {
  std::ostringstream out;
  out << "clipped kernel expansion over " << anchors_.rows() << " anchors, degree vector (";
  for (std::size_t i = 0; i < spec_.degree_vector.size(); ++i) out << (i ? "," : "") << spec_.degree_vector[i];
  out << "), M=" << M_;
  return out.str();
}

KernelSampleSizes kernel_sample_sizes(const TdsParams& params) {
  params.validate();
  KernelSampleSizes s;
  s.mode = params.scale_mode;
  double abm = params.A * params.B * params.M;
  double e4 = std::pow(params.epsilon, 4);
  s.strict_m = std::ceil(std::pow(abm, 4) / e4 * std::log(1.0 / params.delta));
  double hc = 4.0 * params.C * std::log(4.0 / params.delta);
  s.strict_N = std::ceil(s.strict_m * s.strict_m * (params.A * params.B * params.C / e4) *
                         std::pow(hc, 4.0 * params.ell_hc + 1.0));
  if (params.scale_mode == ScaleMode::desk) {
    s.m = params.desk_m;
    s.N = params.desk_n;
    return s;
  }
  if (!(s.strict_m <= kStrictMaxM) || !(s.strict_N <= kStrictMaxN)) {
    std::ostringstream msg;
    msg << "strict sample sizes infeasible: m=" << s.strict_m << ", N=" << s.strict_N;
    throw ContractError(msg.str());
  }
  s.m = static_cast<std::size_t>(std::max(1.0, s.strict_m));
  s.N = static_cast<std::size_t>(std::max(1.0, s.strict_N));
  return s;
}

KernelRunResult tds_kernel_learn(const Source& train, const Source& test_unlabeled, const KernelSpec& spec,
                                 const TdsParams& params, std::uint64_t seed) {
  spec.validate();
  KernelRunResult result{Reject{RejectReason::RadiusViolation, ""}, kernel_sample_sizes(params), {}, {}, {}, {}};
  const std::size_t m = result.sizes.m;
  const std::size_t N = result.sizes.N;

  Rng r1 = substream(seed, 1), r2 = substream(seed, 2), r3 = substream(seed, 3), r4 = substream(seed, 4);
  Dataset ref_train = train(m, r1);
  if (!ref_train.labeled()) throw ContractError("training source must be labeled");
  Dataset ref_test = test_unlabeled(m, r2).without_labels();

  auto radius_reject = [&](const RadiusCheck& rc, const char* set) {
    std::ostringstream msg;
    msg << set << " point " << *rc.violating_index << " has norm " << rc.violating_norm << " > R=" << params.R;
    result.radius = rc;
    result.outcome = Reject{RejectReason::RadiusViolation, msg.str()};
    return result;
  };
  if (auto rc = radius_check(ref_test, params.R); !rc.passed) return radius_reject(rc, "S'_ref");

  GramMatrix K = gram_matrix(ref_train.features(), spec);
  ConstrainedFit fit = solve_constrained_gram(K.values, ref_train.labels(), params.B);
  result.reference_loss = std::sqrt(fit.objective / static_cast<double>(m));
  result.reference_norm_sq = fit.norm_sq;

  Dataset ver_train = train(N, r3).without_labels();
  Dataset ver_test = test_unlabeled(N, r4).without_labels();
  if (auto rc = radius_check(ver_test, params.R); !rc.passed) return radius_reject(rc, "S'_ver");

  ReferenceFeatureMap fmap(Dataset::concat(ref_train.without_labels(), ref_test).features(), spec);
  Matrix phi = empirical_second_moment(fmap, ver_train);
  Matrix phi_prime = empirical_second_moment(fmap, ver_test);
  SpectralReport report = spectral_shift_statistic(phi, phi_prime);
  report.threshold = spectral_threshold(params);
  result.spectral = report;

  if (report.null_violation) {
    result.outcome = Reject{RejectReason::SpectralShift, "test features leave the span of the training features"};
    return result;
  }
  if (report.rho > report.threshold) {
    std::ostringstream msg;
    msg << "rho=" << report.rho << " > threshold=" << report.threshold;
    result.outcome = Reject{RejectReason::SpectralShift, msg.str()};
    return result;
  }
  result.outcome =
      Accept{std::make_shared<KernelHypothesis>(ref_train.features(), fit.coeffs, spec, params.M)};
  return result;
}

void to_json(nlohmann::json& j, const SpectralReport& r) {
  j = nlohmann::json{{"rho", std::isfinite(r.rho) ? nlohmann::json(r.rho) : nlohmann::json("inf")},
                     {"threshold", r.threshold},
                     {"null_violation", r.null_violation},
                     {"eig_tolerance", r.eig_tolerance},
                     {"null_tolerance", r.null_tolerance},
                     {"matrix_dim", r.matrix_dim},
                     {"rank", r.rank}};
}

void to_json(nlohmann::json& j, const KernelSampleSizes& s) {
  j = nlohmann::json{{"m", s.m},
                     {"N", s.N},
                     {"strict_m", s.strict_m},
                     {"strict_N", s.strict_N},
                     {"mode", s.mode == ScaleMode::strict ? "strict" : "desk"},
                     {"strict_constant_c", 1}};
}

}  // namespace tds
