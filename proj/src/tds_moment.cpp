#include "tds/tds_moment.hpp"

#include "tds/random.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tds {

void UniformApproxParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ContractError(std::string("UniformApproxParams: ") + what);
  };
  require(ell >= 0, "ell must be nonnegative");
  require(t_mom >= 0, "t_mom must be nonnegative");
  require(B_coef > 0, "B_coef must be positive");
  require(Delta >= 0, "Delta must be nonnegative");
  require(m_train >= 1 && m_test >= 1, "sample sizes must be positive");
  require(eps_obj >= 0, "eps_obj must be nonnegative");
  require(max_iter >= 1, "max_iter must be positive");
}

UniformApproxParams strict_uniform_approx_params(double epsilon, double M, double r, int k, double R, std::size_t d,
                                                 int ell) {
  if (!(epsilon > 0 && epsilon < 1)) throw ContractError("epsilon must lie in (0,1)");
  if (!(M > 0) || !(r > 0) || k < 1 || !(R > 0) || d < 1 || ell < 0)
    throw ContractError("strict parameters out of range");
  UniformApproxParams a;
  a.mode = ScaleMode::strict;
  a.ell = ell;
  a.eps_prime = epsilon / 11.0;
  a.t_mom = static_cast<int>(std::ceil(2.0 * std::log(2.0 * M / a.eps_prime)));
  a.r = r;
  a.k = k;
  a.R = R;
  double log_B = std::log(r) + 3.0 * ell * std::log(2.0 * (k + ell));
  a.B_coef = std::exp(log_B);
  double log_delta = 2.0 * std::log(a.eps_prime) - std::log(4.0) - 2.0 * log_B -
                     2.0 * ell * a.t_mom * std::log(static_cast<double>(d));
  a.Delta = std::exp(log_delta);
  a.delta_underflow = log_delta < std::log(std::numeric_limits<double>::min());
  a.eps_obj = a.eps_prime * a.eps_prime;
  return a;
}

PolyFit fit_constrained_poly_regression(const Dataset& S, int ell, double B_coef, double eps_obj,
                                        std::size_t max_iter) {
  if (!S.labeled()) throw ContractError("polynomial regression needs labels");
  if (S.empty()) throw ContractError("polynomial regression needs data");
  if (ell < 0) throw ContractError("degree must be nonnegative");
  if (!(B_coef > 0)) throw ContractError("coefficient bound must be positive");
  std::size_t count = MultiIndexSet::count(S.dim(), ell);
  if (count > kPolyFeatureCap)
    throw ContractError("monomial feature count " + std::to_string(count) + " exceeds cap " +
                        std::to_string(kPolyFeatureCap));
  MultiIndexSet set(S.dim(), ell);
  Matrix X = set.design_matrix(S.features());
  const double n = static_cast<double>(S.size());
  Matrix G = X.transpose() * X / n;
  Vector b = X.transpose() * S.labels() / n;
  double yy = S.labels().squaredNorm() / n;

  double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(G, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  auto objective = [&](const Vector& c) { return c.dot(G * c) - 2.0 * b.dot(c) + yy; };

  PolyFit fit{DensePolynomial(S.dim()), Vector::Zero(static_cast<Eigen::Index>(set.size())), yy, 0, true};
  if (lmax > 0) {
    const double step = 1.0 / (2.0 * lmax);
    const std::size_t window = 50;
    Vector c = fit.coeffs;
    double f = objective(c);
    double f_window = f;
    fit.converged = false;
    for (std::size_t it = 1; it <= max_iter; ++it) {
      c = (c - step * 2.0 * (G * c - b)).cwiseMax(-B_coef).cwiseMin(B_coef);
      f = objective(c);
      fit.iterations = it;
      if (it % window == 0) {
        if (f_window - f < eps_obj) {
          fit.converged = true;
          break;
        }
        f_window = f;
      }
    }
    fit.coeffs = c;
    fit.objective = std::max(f, 0.0);
  }
  std::map<MultiIndex, double> terms;
  for (std::size_t i = 0; i < set.size(); ++i) {
    double v = fit.coeffs(static_cast<Eigen::Index>(i));
    if (v != 0.0) terms.emplace(set[i], v);
  }
  fit.poly = DensePolynomial(S.dim(), std::move(terms));
  return fit;
}

PolynomialHypothesis::PolynomialHypothesis(DensePolynomial p, double M) : p_(std::move(p)), M_(M) {
  if (!(M_ > 0)) throw ContractError("hypothesis: clip level must be positive");
}

double PolynomialHypothesis::operator()(const Vector& x) const { return clip(p_(x), M_); }

std::string PolynomialHypothesis::describe() const {
  std::ostringstream out;
  out << "clipped polynomial of degree " << p_.degree() << " with " << p_.coeffs().size() << " terms, M=" << M_;
  return out.str();
}

MomentRunResult tds_uniform_learn(const Source& train, const Source& test_unlabeled,
                                  const std::optional<ReferenceMoments>& reference,
                                  const UniformApproxParams& approx, const TdsParams& params, std::uint64_t seed) {
  params.validate();
  approx.validate();
  Rng r1 = substream(seed, 1), r2 = substream(seed, 2), r3 = substream(seed, 3);
  Dataset S = train(approx.m_train, r1);
  if (!S.labeled()) throw ContractError("training source must be labeled");
  Dataset S_test = test_unlabeled(approx.m_test, r2).without_labels();

  const int degree = approx.moment_degree();
  MomentRunResult result{Reject{RejectReason::MomentShift, ""}, {}, ReferenceMode::analytic, 0, approx.Delta, {}, 0};
  MomentReport report;
  if (reference) {
    result.reference_mode = reference->mode;
    result.reference_size = reference->sample_size;
    if (reference->mode == ReferenceMode::empirical) result.effective_Delta = 1.5 * approx.Delta;
    report = moment_test(S_test, *reference, degree, result.effective_Delta);
  } else {
    Dataset held_out = train(10 * approx.m_test, r3).without_labels();
    ReferenceMoments ref = reference_moments_empirical(held_out, degree);
    result.reference_mode = ReferenceMode::empirical;
    result.reference_size = ref.sample_size;
    result.effective_Delta = 1.5 * approx.Delta;
    report = moment_test(S_test, ref, degree, result.effective_Delta);
  }
  result.moments = report;
  if (!report.passed) {
    std::ostringstream msg;
    msg << "moment alpha=(";
    for (std::size_t i = 0; i < report.offending_alpha.size(); ++i) msg << (i ? "," : "") << report.offending_alpha[i];
    msg << ") deviates by " << report.max_abs_deviation << " > " << report.Delta;
    result.outcome = Reject{RejectReason::MomentShift, msg.str()};
    return result;
  }

  PolyFit fit = fit_constrained_poly_regression(S, approx.ell, approx.B_coef, approx.eps_obj, approx.max_iter);
  result.train_objective = fit.objective;
  result.iterations = fit.iterations;
  result.outcome = Accept{std::make_shared<PolynomialHypothesis>(fit.poly, params.M)};
  return result;
}

void to_json(nlohmann::json& j, const UniformApproxParams& a) {
  j = nlohmann::json{{"ell", a.ell},
                     {"t_mom", a.t_mom},
                     {"B_coef", a.B_coef},
                     {"Delta", a.Delta},
                     {"eps_prime", a.eps_prime},
                     {"r", a.r},
                     {"k", a.k},
                     {"R", a.R},
                     {"m_train", a.m_train},
                     {"m_test", a.m_test},
                     {"eps_obj", a.eps_obj},
                     {"max_iter", a.max_iter},
                     {"mode", a.mode == ScaleMode::strict ? "strict" : "desk"},
                     {"delta_underflow", a.delta_underflow}};
}

void from_json(const nlohmann::json& j, UniformApproxParams& a) {
  UniformApproxParams d;
  a.ell = j.value("ell", d.ell);
  a.t_mom = j.value("t_mom", a.ell);
  a.B_coef = j.value("B_coef", d.B_coef);
  a.Delta = j.value("Delta", d.Delta);
  a.eps_prime = j.value("eps_prime", d.eps_prime);
  a.r = j.value("r", d.r);
  a.k = j.value("k", d.k);
  a.R = j.value("R", d.R);
  a.m_train = j.value("m_train", d.m_train);
  a.m_test = j.value("m_test", d.m_test);
  a.eps_obj = j.value("eps_obj", d.eps_obj);
  a.max_iter = j.value("max_iter", d.max_iter);
  a.mode = j.value("mode", std::string("desk")) == "strict" ? ScaleMode::strict : ScaleMode::desk;
  a.delta_underflow = false;
}

}  // namespace tds
