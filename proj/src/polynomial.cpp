#include "tds/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace tds {

int total_degree(const MultiIndex& alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

double monomial(const Vector& x, const MultiIndex& alpha) {
  if (static_cast<std::size_t>(x.size()) != alpha.size()) throw ContractError("monomial: dimension mismatch");
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    for (int p = 0; p < alpha[i]; ++p) v *= x(static_cast<Eigen::Index>(i));
  return v;
}

std::size_t MultiIndexSet::count(std::size_t dim, int max_total_degree) {
  // C(d + k, k) computed incrementally; exact in integers at each step.
  std::size_t c = 1;
  for (int k = 1; k <= max_total_degree; ++k) c = c * (dim + static_cast<std::size_t>(k)) / static_cast<std::size_t>(k);
  return c;
}

MultiIndexSet::MultiIndexSet(std::size_t dim, int max_total_degree) : dim_(dim), max_degree_(max_total_degree) {
  if (dim == 0) throw ContractError("MultiIndexSet: dimension must be positive");
  if (max_total_degree < 0) throw ContractError("MultiIndexSet: degree must be >= 0");
  MultiIndex alpha(dim, 0);
  // Compositions of each total degree with the first variable largest first.
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int remaining) {
    if (pos + 1 == dim) {
      alpha[pos] = remaining;
      indices_.push_back(alpha);
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      alpha[pos] = a;
      rec(pos + 1, remaining - a);
    }
    alpha[pos] = 0;
  };
  for (int deg = 0; deg <= max_total_degree; ++deg) rec(0, deg);

  parent_.assign(indices_.size(), 0);
  extend_var_.assign(indices_.size(), 0);
  for (std::size_t i = 0; i < indices_.size(); ++i) lookup_.emplace(indices_[i], i);
  for (std::size_t i = 1; i < indices_.size(); ++i) {
    MultiIndex p = indices_[i];
    std::size_t j = 0;
    while (p[j] == 0) ++j;
    --p[j];
    parent_[i] = lookup_.at(p);
    extend_var_[i] = j;
  }
}

std::size_t MultiIndexSet::position(const MultiIndex& alpha) const {
  auto it = lookup_.find(alpha);
  return it == lookup_.end() ? size() : it->second;
}

Vector MultiIndexSet::monomials(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) throw ContractError("MultiIndexSet: dimension mismatch");
  Vector out(static_cast<Eigen::Index>(size()));
  out(0) = 1.0;
  for (std::size_t i = 1; i < size(); ++i)
    out(static_cast<Eigen::Index>(i)) =
        out(static_cast<Eigen::Index>(parent_[i])) * x(static_cast<Eigen::Index>(extend_var_[i]));
  return out;
}

Matrix MultiIndexSet::design_matrix(const PointMatrix& points) const {
  if (static_cast<std::size_t>(points.cols()) != dim_) throw ContractError("MultiIndexSet: dimension mismatch");
  Matrix out(points.rows(), static_cast<Eigen::Index>(size()));
  out.col(0).setOnes();
  for (std::size_t i = 1; i < size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) =
        out.col(static_cast<Eigen::Index>(parent_[i])).cwiseProduct(points.col(static_cast<Eigen::Index>(extend_var_[i])));
  return out;
}

DensePolynomial::DensePolynomial(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ContractError("DensePolynomial: dimension must be positive");
}

DensePolynomial::DensePolynomial(std::size_t dim, std::map<MultiIndex, double> coeffs)
    : DensePolynomial(dim) {
  for (const auto& [alpha, c] : coeffs) {
    check_index(alpha);
    if (!std::isfinite(c)) throw ContractError("DensePolynomial: coefficients must be finite");
  }
  coeffs_ = std::move(coeffs);
}

DensePolynomial DensePolynomial::constant(std::size_t dim, double c) {
  DensePolynomial p(dim);
  p.set_coeff(MultiIndex(dim, 0), c);
  return p;
}

DensePolynomial DensePolynomial::linear(const Vector& w) {
  DensePolynomial p(static_cast<std::size_t>(w.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    MultiIndex e(static_cast<std::size_t>(w.size()), 0);
    e[static_cast<std::size_t>(i)] = 1;
    p.set_coeff(e, w(i));
  }
  return p;
}

DensePolynomial DensePolynomial::univariate(const std::vector<double>& coeffs) {
  DensePolynomial p(1);
  for (std::size_t j = 0; j < coeffs.size(); ++j) p.set_coeff({static_cast<int>(j)}, coeffs[j]);
  return p;
}

void DensePolynomial::check_index(const MultiIndex& alpha) const {
  if (alpha.size() != dim_) throw ContractError("DensePolynomial: multi-index has wrong dimension");
  for (int a : alpha)
    if (a < 0) throw ContractError("DensePolynomial: negative exponent");
}

int DensePolynomial::degree() const {
  int d = 0;
  for (const auto& [alpha, c] : coeffs_) d = std::max(d, total_degree(alpha));
  return d;
}

double DensePolynomial::coeff(const MultiIndex& alpha) const {
  auto it = coeffs_.find(alpha);
  return it == coeffs_.end() ? 0.0 : it->second;
}

void DensePolynomial::set_coeff(const MultiIndex& alpha, double value) {
  check_index(alpha);
  if (!std::isfinite(value)) throw ContractError("DensePolynomial: coefficients must be finite");
  coeffs_[alpha] = value;
}

double DensePolynomial::operator()(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) throw ContractError("DensePolynomial: dimension mismatch");
  const int deg = degree();
  // powers(i, p) = x_i^p
  Matrix powers(static_cast<Eigen::Index>(dim_), deg + 1);
  for (std::size_t i = 0; i < dim_; ++i) {
    auto r = static_cast<Eigen::Index>(i);
    powers(r, 0) = 1.0;
    for (int p = 1; p <= deg; ++p) powers(r, p) = powers(r, p - 1) * x(r);
  }
  double acc = 0.0;
  for (const auto& [alpha, c] : coeffs_) {
    double term = c;
    for (std::size_t i = 0; i < dim_; ++i) term *= powers(static_cast<Eigen::Index>(i), alpha[i]);
    acc += term;
  }
  return acc;
}

Evaluator DensePolynomial::evaluator() const {
  return [p = *this](const Vector& x) { return p(x); };
}

DensePolynomial DensePolynomial::operator+(const DensePolynomial& other) const {
  if (other.dim_ != dim_) throw ContractError("DensePolynomial: dimension mismatch");
  DensePolynomial out = *this;
  for (const auto& [alpha, c] : other.coeffs_) out.coeffs_[alpha] += c;
  return out;
}

DensePolynomial DensePolynomial::operator-(const DensePolynomial& other) const { return *this + other * -1.0; }

DensePolynomial DensePolynomial::operator*(const DensePolynomial& other) const {
  if (other.dim_ != dim_) throw ContractError("DensePolynomial: dimension mismatch");
  DensePolynomial out(dim_);
  MultiIndex sum(dim_);
  for (const auto& [a, ca] : coeffs_)
    for (const auto& [b, cb] : other.coeffs_) {
      for (std::size_t i = 0; i < dim_; ++i) sum[i] = a[i] + b[i];
      out.coeffs_[sum] += ca * cb;
    }
  return out;
}

DensePolynomial DensePolynomial::operator*(double s) const {
  DensePolynomial out = *this;
  for (auto& [alpha, c] : out.coeffs_) c *= s;
  return out;
}

DensePolynomial DensePolynomial::pruned(double tol) const {
  DensePolynomial out(dim_);
  for (const auto& [alpha, c] : coeffs_)
    if (std::abs(c) > tol) out.coeffs_.emplace(alpha, c);
  return out;
}

void to_json(nlohmann::json& j, const DensePolynomial& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [alpha, c] : p.coeffs()) terms.push_back({{"alpha", alpha}, {"coeff", c}});
  j = nlohmann::json{{"dim", p.dim()}, {"degree", p.degree()}, {"terms", terms}};
}

DensePolynomial polynomial_from_json(const nlohmann::json& j) {
  DensePolynomial p(j.at("dim").get<std::size_t>());
  for (const auto& t : j.at("terms")) p.set_coeff(t.at("alpha").get<MultiIndex>(), t.at("coeff").get<double>());
  return p;
}

}  // namespace tds
