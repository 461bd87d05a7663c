#include "tds/polyapprox.hpp"
#include "tds/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace tds;

namespace {

UnivariateFn sig = [](double v) { return sigmoid(v); };

}  // namespace

TEST(Chebyshev, ReproducesPolynomialsExactly) {
  UnivariateFn cubic = [](double x) { return 2 * x * x * x - x + 0.5; };
  auto q = chebyshev_approx_univariate(cubic, 3.0, 3);
  EXPECT_LE(grid_sup_error(q, cubic, 3.0).value, 1e-12);
  DensePolynomial m = q.monomial();
  EXPECT_NEAR(m.coeff({3}), 2.0, 1e-12);
  EXPECT_NEAR(m.coeff({1}), -1.0, 1e-12);
  EXPECT_NEAR(m.coeff({0}), 0.5, 1e-12);
}

TEST(Chebyshev, MonomialFormAgreesWithClenshaw) {
  auto q = chebyshev_approx_univariate(sig, 4.0, 20);
  DensePolynomial m = q.monomial();
  for (double x = -4.0; x <= 4.0; x += 0.37) EXPECT_NEAR(m((Vector(1) << x).finished()), q(x), 1e-9);
}

TEST(Chebyshev, MonomialCapIsRangeError) {
  auto q = chebyshev_approx_univariate(sig, 1.0, kMonomialDegreeCap + 1);
  EXPECT_THROW(q.monomial(), RangeError);
}

TEST(Chebyshev, TruncatedSeriesIsNested) {
  auto low = chebyshev_approx_univariate(sig, 4.0, 6, ChebyshevMethod::truncated_series);
  auto high = chebyshev_approx_univariate(sig, 4.0, 12, ChebyshevMethod::truncated_series);
  for (std::size_t j = 0; j < low.chebyshev_coeffs().size(); ++j)
    EXPECT_DOUBLE_EQ(low.chebyshev_coeffs()[j], high.chebyshev_coeffs()[j]);
}

TEST(Chebyshev, SigmoidOnFourUnderOnePercentAtModestDegree) {
  int deg = degree_for_target(sig, 4.0, 1e-2, 40);
  EXPECT_LE(deg, 40);
  auto q = chebyshev_approx_univariate(sig, 4.0, deg);
  // Independent dense grid, different from the one used in the search.
  double worst = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    double x = -4.0 + 8.0 * i / 100000.0;
    worst = std::max(worst, std::abs(q(x) - sigmoid(x)));
  }
  EXPECT_LE(worst, 1e-2);
}

TEST(DegreeSearch, MonotoneInRadiusAndSubquadratic) {
  int d2 = degree_for_target(sig, 2.0, 1e-3, 512);
  int d4 = degree_for_target(sig, 4.0, 1e-3, 512);
  int d8 = degree_for_target(sig, 8.0, 1e-3, 512);
  EXPECT_LE(d2, d4);
  EXPECT_LE(d4, d8);
  // Quadratic growth would multiply by 16 from R=2 to R=8.
  EXPECT_LT(static_cast<double>(d8) / d2, 16.0);
}

TEST(DegreeSearch, UnreachableTargetThrows) {
  EXPECT_THROW(degree_for_target(sig, 8.0, 1e-12, 8), NotReachable);
  UnivariateFn relu = named_function("relu");
  EXPECT_THROW(degree_for_target(relu, 1.0, 1e-9, 64), NotReachable);
}

TEST(Certify, ReportsMeasuredErrorAndCoefficients) {
  auto c = certify_univariate(sig, 2.0, 1e-3);
  EXPECT_LE(c.certificate.measured_sup_error, 1e-3);
  ASSERT_TRUE(c.certificate.coeff_l1.has_value());
  EXPECT_GE(*c.certificate.coeff_l1, 0.5);  // constant term of the sigmoid
  nlohmann::json j = c.certificate;
  EXPECT_EQ(j["degree"].get<int>(), c.certificate.degree);
}

TEST(Compose, DepthTwoSigmoidNetCertified) {
  NeuralNet raw = random_net(5, {3, 1}, Activation::sigmoid(), 1.0, 11);
  auto w = raw.weights();
  for (Eigen::Index i = 0; i < w[0].rows(); ++i) w[0].row(i).normalize();
  NeuralNet net(w, Activation::sigmoid());
  ComposedNetApprox a = compose_sigmoid_net_approx(net, 0.05, 1.0);
  EXPECT_LE(a.certificate.measured_sup_error, 0.05);
  ASSERT_EQ(a.degree_vector.size(), 1u);
  ASSERT_TRUE(a.polynomial.has_value());
  // The monomial expansion and the layered evaluator agree.
  Rng rng = substream(5, 0);
  for (int i = 0; i < 200; ++i) {
    Vector x = uniform_ball_point(5, 1.0, rng);
    EXPECT_NEAR((*a.polynomial)(x), a.evaluator(x), 1e-8);
  }
  // Independent Monte-Carlo check with a different seed.
  auto check = ball_sup_error(a.evaluator, [&](const Vector& x) { return net(x); }, 5, 1.0, 20000, 99);
  EXPECT_LE(check.value, 0.05);
}

TEST(Compose, DepthThreeSigmoidNet) {
  NeuralNet net = random_net(3, {2, 2, 1}, Activation::sigmoid(), 0.5, 4);
  ComposedNetApprox a = compose_sigmoid_net_approx(net, 0.05, 1.0);
  EXPECT_EQ(a.degree_vector.size(), 2u);
  EXPECT_LE(a.certificate.measured_sup_error, 0.05);
  EXPECT_FALSE(a.polynomial.has_value());
  EXPECT_THROW(compose_sigmoid_net_approx(random_net(3, {2, 1}, Activation::relu(), 1.0, 1), 0.1, 1.0),
               ContractError);
}

TEST(Envelope, ApproximantStaysUnderGrowthBound) {
  auto q = chebyshev_approx_univariate(sig, 2.0, 10);
  DensePolynomial p = q.monomial();
  auto env = out_of_radius_bound(1.0, 0.01, 2.0, 1, 10);
  auto res = check_envelope(p.evaluator(), 1, env, 2000, 3);
  EXPECT_TRUE(res.passed);
  EXPECT_LE(res.worst_ratio, 1.0);
}

TEST(NamedFunction, KnownAndUnknown) {
  EXPECT_DOUBLE_EQ(named_function("square")(3.0), 9.0);
  EXPECT_THROW(named_function("cosh"), ContractError);
}
