#include "tds/polynomial.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace tds;

TEST(MultiIndexSet, CountMatchesBinomial) {
  for (std::size_t d = 1; d <= 5; ++d)
    for (int deg = 0; deg <= 6; ++deg) {
      MultiIndexSet s(d, deg);
      ASSERT_EQ(s.size(), MultiIndexSet::count(d, deg));
      std::set<MultiIndex> unique(s.indices().begin(), s.indices().end());
      EXPECT_EQ(unique.size(), s.size());
      for (const auto& a : s.indices()) EXPECT_LE(total_degree(a), deg);
    }
  EXPECT_EQ(MultiIndexSet::count(3, 4), 35u);
}

TEST(MultiIndexSet, GradedLexOrder) {
  MultiIndexSet s(2, 2);
  std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(s.indices(), expected);
  EXPECT_EQ(s.position({1, 1}), 4u);
  EXPECT_EQ(s.position({3, 0}), s.size());
}

TEST(MultiIndexSet, MonomialsMatchDirectProducts) {
  MultiIndexSet s(3, 4);
  Vector x(3);
  x << 0.7, -1.3, 2.1;
  Vector m = s.monomials(x);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(m(static_cast<Eigen::Index>(i)), monomial(x, s[i]), 1e-12);
  PointMatrix pts(2, 3);
  pts << 0.7, -1.3, 2.1, 1, 2, 3;
  Matrix X = s.design_matrix(pts);
  EXPECT_EQ(X.row(0).transpose(), m);
}

TEST(Monomial, EmptyProductAndExample) {
  Vector x(2);
  x << 2, 3;
  EXPECT_EQ(monomial(x, {0, 0}), 1.0);
  EXPECT_EQ(monomial(x, {1, 2}), 18.0);
}

TEST(DensePolynomial, ArithmeticAgreesWithEvaluation) {
  DensePolynomial p(2, {{{0, 0}, 1.0}, {{1, 0}, 2.0}, {{0, 2}, -1.0}});
  DensePolynomial q = DensePolynomial::linear((Vector(2) << 0.5, -1.0).finished());
  Vector x(2);
  x << 1.5, -0.25;
  EXPECT_NEAR((p * q)(x), p(x) * q(x), 1e-12);
  EXPECT_NEAR((p + q)(x), p(x) + q(x), 1e-12);
  EXPECT_NEAR((p - q)(x), p(x) - q(x), 1e-12);
  EXPECT_NEAR((p * 3.0)(x), 3.0 * p(x), 1e-12);
  EXPECT_EQ((p * q).degree(), 3);
  EXPECT_EQ((p - p).pruned().coeffs().size(), 0u);
}

TEST(DensePolynomial, UnivariateAndValidation) {
  DensePolynomial p = DensePolynomial::univariate({1, 0, -2});
  EXPECT_DOUBLE_EQ(p((Vector(1) << 3).finished()), 1 - 18);
  EXPECT_THROW(p.set_coeff({1, 1}, 1.0), ContractError);
  EXPECT_THROW(p.set_coeff({-1}, 1.0), ContractError);
  EXPECT_THROW(DensePolynomial(2) + DensePolynomial(3), ContractError);
}

TEST(DensePolynomial, JsonRoundTrip) {
  DensePolynomial p(3, {{{0, 0, 0}, 0.25}, {{1, 2, 0}, -3.5}});
  nlohmann::json j = p;
  DensePolynomial back = polynomial_from_json(j);
  EXPECT_EQ(back.coeffs(), p.coeffs());
}
