#pragma once

#include "tds/core.hpp"

#include <json.hpp>

#include <cstddef>
#include <map>
#include <vector>

namespace tds {

/// Exponent vector alpha in N^d.
using MultiIndex = std::vector<int>;

int total_degree(const MultiIndex& alpha);

/// x^alpha = prod_i x_i^alpha_i.
double monomial(const Vector& x, const MultiIndex& alpha);

/// Every alpha in N^d with |alpha|_1 <= max_total_degree, in graded
/// lexicographic order (by total degree, then lexicographically descending
/// so that x_1 precedes x_2).
///
/// Also records, for every nonzero index, a parent index and the variable
/// that extends it, which lets monomial features be built with one
/// multiplication each.
class MultiIndexSet {
 public:
  MultiIndexSet(std::size_t dim, int max_total_degree);

  std::size_t dim() const { return dim_; }
  int max_total_degree() const { return max_degree_; }
  std::size_t size() const { return indices_.size(); }
  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  /// Position of alpha, or size() when absent.
  std::size_t position(const MultiIndex& alpha) const;

  /// All monomials of x in index order.
  Vector monomials(const Vector& x) const;
  /// Row i holds monomials(points.row(i)).
  Matrix design_matrix(const PointMatrix& points) const;

  /// C(d + deg, deg).
  static std::size_t count(std::size_t dim, int max_total_degree);

 private:
  std::size_t dim_;
  int max_degree_;
  std::vector<MultiIndex> indices_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> extend_var_;
  std::map<MultiIndex, std::size_t> lookup_;
};

/// Sparse multivariate polynomial in the monomial basis.
class DensePolynomial {
 public:
  explicit DensePolynomial(std::size_t dim);
  DensePolynomial(std::size_t dim, std::map<MultiIndex, double> coeffs);

  static DensePolynomial constant(std::size_t dim, double c);
  /// sum_i w_i x_i.
  static DensePolynomial linear(const Vector& w);
  /// Univariate polynomial from coefficients c_0, c_1, ...
  static DensePolynomial univariate(const std::vector<double>& coeffs);

  std::size_t dim() const { return dim_; }
  int degree() const;
  const std::map<MultiIndex, double>& coeffs() const { return coeffs_; }
  double coeff(const MultiIndex& alpha) const;
  void set_coeff(const MultiIndex& alpha, double value);

  double operator()(const Vector& x) const;
  Evaluator evaluator() const;

  DensePolynomial operator+(const DensePolynomial& other) const;
  DensePolynomial operator-(const DensePolynomial& other) const;
  DensePolynomial operator*(const DensePolynomial& other) const;
  DensePolynomial operator*(double s) const;

  /// Drops coefficients with |c| <= tol.
  DensePolynomial pruned(double tol = 0.0) const;

 private:
  void check_index(const MultiIndex& alpha) const;

  std::size_t dim_;
  std::map<MultiIndex, double> coeffs_;
};

void to_json(nlohmann::json& j, const DensePolynomial& p);
DensePolynomial polynomial_from_json(const nlohmann::json& j);

}  // namespace tds
