#include "tds/tds_kernel.hpp"
#include "tds/random.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace tds;

namespace {

PointMatrix ball_points(std::size_t n, Eigen::Index d, std::uint64_t seed, double R = 1.0) {
  Rng rng = substream(seed, 0);
  PointMatrix p(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) = uniform_ball_point(d, R, rng).transpose();
  return p;
}

Vector uniform_labels(std::size_t n, std::uint64_t seed) {
  Rng rng = substream(seed, 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector y(static_cast<Eigen::Index>(n));
  for (auto& v : y) v = u(rng);
  return y;
}

// Brute-force Lagrangian path: a(mu) = (K + mu I)^-1 y by LDLT on a log grid,
// best feasible objective, then refined by bisection between grid neighbours.
// The grid starts at 1e-5: below that, a^T K a of the singular-K solves is
// dominated by roundoff from the null space.
double grid_oracle_objective(const Matrix& K, const Vector& y, double B) {
  const Eigen::Index n = K.rows();
  auto at = [&](double mu, double& norm) {
    Vector a = (K + mu * Matrix::Identity(n, n)).ldlt().solve(y);
    norm = a.dot(K * a);
    return (y - K * a).squaredNorm();
  };
  double norm = 0.0;
  const int steps = 20000;
  double best = y.squaredNorm();  // a = 0 is always feasible
  double lo_mu = 0.0, hi_mu = -1.0;
  double prev_mu = 0.0;
  for (int i = 0; i <= steps; ++i) {
    double mu = std::pow(10.0, -5.0 + 13.0 * i / steps);
    double obj = at(mu, norm);
    if (norm <= B) {
      if (obj < best) best = obj;
      if (hi_mu < 0) {
        hi_mu = mu;
        lo_mu = prev_mu;
      }
    }
    prev_mu = mu;
  }
  if (hi_mu > 0 && lo_mu > 0) {
    for (int it = 0; it < 100; ++it) {
      double mid = 0.5 * (lo_mu + hi_mu);
      at(mid, norm);
      (norm <= B ? hi_mu : lo_mu) = mid;
    }
    best = std::min(best, at(hi_mu, norm));
  }
  return best;
}

// FISTA on min ||y - Phi v||^2 s.t. ||v||^2 <= B in the explicit feature space.
double fista_ball_objective(const Matrix& Phi, const Vector& y, double B, int iters) {
  double L = 2.0 * Eigen::JacobiSVD<Matrix>(Phi).singularValues()(0) * Eigen::JacobiSVD<Matrix>(Phi).singularValues()(0);
  Vector v = Vector::Zero(Phi.cols()), z = v;
  double t = 1.0;
  double radius = std::sqrt(B);
  for (int k = 0; k < iters; ++k) {
    Vector g = -2.0 * Phi.transpose() * (y - Phi * z);
    Vector next = z - g / L;
    double nn = next.norm();
    if (nn > radius) next *= radius / nn;
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / t_next) * (next - v);
    v = next;
    t = t_next;
  }
  return (y - Phi * v).squaredNorm();
}

Matrix random_psd(Eigen::Index n, Rng& rng, Eigen::Index rank = -1) {
  std::normal_distribution<double> g;
  Matrix a(n, rank < 0 ? n : rank);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a * a.transpose();
}

}  // namespace

TEST(RadiusCheck, BoundaryAndViolation) {
  PointMatrix x = PointMatrix::Zero(3, 2);
  EXPECT_TRUE(radius_check(Dataset(x), 1.0).passed);
  x(1, 0) = 1.5;
  RadiusCheck rc = radius_check(Dataset(x), 1.0);
  EXPECT_FALSE(rc.passed);
  EXPECT_EQ(*rc.violating_index, 1u);
  x(1, 0) = 0.6;
  x(1, 1) = 0.8;
  EXPECT_TRUE(radius_check(Dataset(x), 1.0).passed);
}

TEST(ConstrainedKernelRegression, ZeroLabelsGiveZero) {
  PointMatrix x = ball_points(6, 2, 1);
  Vector a = fit_constrained_kernel_regression(Dataset(x, Vector::Zero(6)), KernelSpec{{2}, true}, 1.0);
  EXPECT_EQ(a, Vector::Zero(6));
}

TEST(ConstrainedKernelRegression, InactiveConstraintInterpolates) {
  PointMatrix x = ball_points(6, 3, 2);
  Vector y = uniform_labels(6, 2);
  KernelSpec spec{{3}, true};
  Matrix K = gram_matrix(x, spec).values;
  ConstrainedFit fit = solve_constrained_gram(K, y, 1e12);
  EXPECT_EQ(fit.multiplier, 0.0);
  EXPECT_LE((y - K * fit.coeffs).norm(), 1e-8);
  EXPECT_LE((fit.coeffs - K.ldlt().solve(y)).norm(), 1e-6 * fit.coeffs.norm());
}

TEST(ConstrainedKernelRegression, MatchesGridOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PointMatrix x = ball_points(6, 1, 100 + seed);
    Vector y = uniform_labels(6, 100 + seed);
    Matrix K = gram_matrix(x, KernelSpec{{2}, true}).values;
    double B = 0.05 + 0.1 * static_cast<double>(seed % 5);
    ConstrainedFit fit = solve_constrained_gram(K, y, B);
    double oracle = grid_oracle_objective(K, y, B);
    EXPECT_NEAR(fit.objective, oracle, 1e-6 * std::max(1.0, y.squaredNorm())) << "seed " << seed;
    EXPECT_LE(fit.coeffs.dot(K * fit.coeffs), B * (1 + 1e-6));
  }
}

TEST(ConstrainedKernelRegression, RepresenterMatchesExplicitFeatureSpace) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t n = 8;
    PointMatrix x = ball_points(n, 2, 200 + seed);
    Vector y = uniform_labels(n, 200 + seed);
    KernelSpec spec{{3}, true};
    Matrix K = gram_matrix(x, spec).values;
    double B = 0.3;
    ConstrainedFit fit = solve_constrained_gram(K, y, B);
    Matrix Phi(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(*feature_map_length(2, 3, true)));
    for (Eigen::Index i = 0; i < Phi.rows(); ++i) Phi.row(i) = explicit_feature_map(x.row(i).transpose(), 3).transpose();
    double oracle = fista_ball_objective(Phi, y, B, 100000);
    EXPECT_NEAR(fit.objective, oracle, 1e-6 * std::max(1.0, y.squaredNorm())) << "seed " << seed;
  }
}

TEST(ConstrainedKernelRegression, RejectsIndefiniteMatrix) {
  Matrix K(2, 2);
  K << 1, 0, 0, -1;
  EXPECT_THROW(solve_constrained_gram(K, Vector::Ones(2), 1.0), NumericalError);
}

TEST(SecondMoment, SinglePointIsRankOne) {
  ReferenceFeatureMap fmap(ball_points(4, 2, 3), KernelSpec{{2}, true});
  PointMatrix x = ball_points(1, 2, 4);
  Matrix phi = empirical_second_moment(fmap, Dataset(x));
  Vector f = fmap(x.row(0).transpose());
  EXPECT_LE((phi - f * f.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SecondMoment, AnchorsAsVerificationGiveScaledSquare) {
  PointMatrix anchors = ball_points(10, 3, 5);
  KernelSpec spec{{2}, true};
  ReferenceFeatureMap fmap(anchors, spec);
  Matrix K = gram_matrix(anchors, spec).values;
  Matrix phi = empirical_second_moment(fmap, Dataset(anchors));
  EXPECT_LE((phi - K * K / 10.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SecondMoment, DuplicationInvariant) {
  ReferenceFeatureMap fmap(ball_points(6, 2, 6), KernelSpec{{2}, true});
  Dataset ver(ball_points(50, 2, 7));
  Matrix a = empirical_second_moment(fmap, ver);
  Matrix b = empirical_second_moment(fmap, Dataset::concat(ver, ver));
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SpectralStatistic, IdentityAndScaling) {
  Rng rng = substream(8, 0);
  Matrix phi = random_psd(6, rng);
  EXPECT_NEAR(spectral_shift_statistic(phi, phi).rho, 1.0, 1e-9);
  EXPECT_NEAR(spectral_shift_statistic(phi, 2 * phi).rho, 2.0, 1e-9);
  Matrix low = random_psd(6, rng, 3);
  SpectralReport r = spectral_shift_statistic(low, low);
  EXPECT_FALSE(r.null_violation);
  EXPECT_EQ(r.rank, 3u);
  EXPECT_NEAR(r.rho, 1.0, 1e-9);
}

TEST(SpectralStatistic, NullViolationDetected) {
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Identity(2, 2);
  a(0, 0) = 1.0;
  SpectralReport r = spectral_shift_statistic(a, b);
  EXPECT_TRUE(r.null_violation);
  EXPECT_TRUE(std::isinf(r.rho));
  EXPECT_FALSE(spectral_shift_statistic(b, a).null_violation);
}

TEST(SpectralStatistic, MatchesGeneralizedEigensolver) {
  Rng rng = substream(9, 0);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix phi = random_psd(6, rng) + 0.1 * Matrix::Identity(6, 6);
    Matrix phi_prime = random_psd(6, rng);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(phi_prime, phi);
    double oracle = ges.eigenvalues().maxCoeff();
    EXPECT_NEAR(spectral_shift_statistic(phi, phi_prime).rho, oracle, 1e-8 * oracle);
  }
}

TEST(SpectralStatistic, RejectsAsymmetricInput) {
  Matrix a = Matrix::Identity(3, 3);
  a(0, 1) = 0.5;
  EXPECT_THROW(spectral_shift_statistic(a, Matrix::Identity(3, 3)), ContractError);
}

TEST(SpectralStatistic, MultiplicativeConcentrationImprovesWithN) {
  const Eigen::Index d = 3;
  KernelSpec spec{{2}, true};
  ReferenceFeatureMap fmap(ball_points(20, d, 10), spec);
  Matrix population = empirical_second_moment(fmap, Dataset(ball_points(400000, d, 11)));
  Rng rng = substream(12, 0);
  std::normal_distribution<double> g;
  std::vector<Vector> dirs(100, Vector(20));
  for (auto& a : dirs)
    for (auto& v : a) v = g(rng);
  std::vector<double> worst;
  for (std::size_t N : {100u, 1000u, 10000u}) {
    Matrix est = empirical_second_moment(fmap, Dataset(ball_points(N, d, 13 + N)));
    double w = 0.0;
    for (const auto& a : dirs) w = std::max(w, std::abs(a.dot(est * a) / a.dot(population * a) - 1.0));
    worst.push_back(w);
  }
  EXPECT_GT(worst[0], worst[2]);
  EXPECT_LE(worst[2], 0.1);
}

TEST(KernelSampleSizes, StrictFormulasAndDeskOverride) {
  TdsParams p;
  p.epsilon = 0.5;
  p.delta = 0.5;
  double m = std::ceil(std::pow(1.0, 4) / std::pow(0.5, 4) * std::log(2.0));
  KernelSampleSizes s = kernel_sample_sizes(p);
  EXPECT_EQ(s.m, p.desk_m);
  EXPECT_DOUBLE_EQ(s.strict_m, m);
  double N = std::ceil(m * m * (1.0 / std::pow(0.5, 4)) * std::pow(4.0 * std::log(8.0), 5.0));
  EXPECT_DOUBLE_EQ(s.strict_N, N);
  p.scale_mode = ScaleMode::strict;
  EXPECT_THROW(kernel_sample_sizes(p), ContractError);  // N is far past the cap
}

TEST(KernelHypothesis, ClipsAtEvaluation) {
  PointMatrix anchors(1, 1);
  anchors << 1.0;
  KernelHypothesis h(anchors, (Vector(1) << 10.0).finished(), KernelSpec{{1}, true}, 2.0);
  Vector x(1);
  x << 1.0;
  EXPECT_DOUBLE_EQ(h.raw(x), 20.0);
  EXPECT_DOUBLE_EQ(h(x), 2.0);
}

namespace {

KernelRunResult run_kernel(const ScenarioSpec& s, const TdsParams& p, const KernelSpec& spec, std::uint64_t seed) {
  return tds_kernel_learn(labeled_source(s, s.train_marginal), marginal_source(s.test_marginal), spec, p, seed);
}

}  // namespace

TEST(TdsKernelLearn, RejectsOutOfRadiusTestData) {
  ScenarioSpec s = preset_scenario("ball-sigmoid-outside");
  TdsParams p;
  p.desk_m = 50;
  p.desk_n = 200;
  KernelRunResult r = run_kernel(s, p, KernelSpec{{2}, true}, 1);
  ASSERT_FALSE(accepted(r.outcome));
  EXPECT_EQ(std::get<Reject>(r.outcome).reason, RejectReason::RadiusViolation);
  EXPECT_FALSE(r.spectral.has_value());
}

TEST(TdsKernelLearn, RejectsInflatedCovariance) {
  ScenarioSpec s = preset_scenario("ball-sigmoid-inflated");
  TdsParams p;
  p.R = 2.0;
  p.epsilon = 0.3;
  p.desk_m = 50;
  p.desk_n = 2000;
  KernelRunResult r = run_kernel(s, p, KernelSpec{{2}, true}, 2);
  ASSERT_FALSE(accepted(r.outcome));
  EXPECT_EQ(std::get<Reject>(r.outcome).reason, RejectReason::SpectralShift);
  EXPECT_GT(r.spectral->rho, 1.5);
}

TEST(TdsKernelLearn, AcceptsLowDimensionalMatchedMarginals) {
  MarginalSpec line = uniform_ball(1, 1.0);
  ScenarioSpec s{line, line, DensePolynomial::linear(Vector::Constant(1, 0.5)), 0.0, 0.0, 1.0, 0};
  TdsParams p;
  p.epsilon = 0.9;
  p.desk_m = 10;
  p.desk_n = 100000;
  KernelSpec spec{{1}, true};
  KernelRunResult r = run_kernel(s, p, spec, 3);
  ASSERT_TRUE(accepted(r.outcome)) << r.spectral->rho << " vs " << r.spectral->threshold;
  const auto& h = dynamic_cast<const KernelHypothesis&>(*std::get<Accept>(r.outcome).hypothesis);
  Matrix K = gram_matrix(h.anchors(), spec).values;
  EXPECT_LE(h.coeffs().dot(K * h.coeffs()), p.B * (1 + 1e-6));
  EXPECT_LE(r.spectral->rho, r.spectral->threshold);
}

TEST(TdsKernelLearn, DeterministicPerSeed) {
  ScenarioSpec s = preset_scenario("ball-sigmoid");
  TdsParams p;
  p.desk_m = 30;
  p.desk_n = 300;
  KernelRunResult a = run_kernel(s, p, KernelSpec{{2}, true}, 4);
  KernelRunResult b = run_kernel(s, p, KernelSpec{{2}, true}, 4);
  EXPECT_EQ(a.spectral->rho, b.spectral->rho);
  EXPECT_EQ(*a.reference_loss, *b.reference_loss);
}

TEST(TdsKernelLearn, FiniteSourceExhaustionPropagates) {
  ScenarioSpec s = preset_scenario("ball-sigmoid");
  Dataset small = label(sample(s.train_marginal, 20, 1), s, 1).data;
  TdsParams p;
  p.desk_m = 10;
  p.desk_n = 100;
  EXPECT_THROW(tds_kernel_learn(finite_source(small), marginal_source(s.test_marginal), KernelSpec{{2}, true}, p, 0),
               SourceExhausted);
}
