#include "tds/kernels.hpp"

#include "tds/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace tds {

void KernelSpec::validate() const {
  if (degree_vector.empty()) throw ContractError("KernelSpec: degree vector must be nonempty");
  for (int l : degree_vector)
    if (l < 1) throw ContractError("KernelSpec: every degree must be >= 1");
  (void)total_degree();
}

std::int64_t KernelSpec::total_degree() const {
  std::int64_t p = 1;
  for (int l : degree_vector) {
    if (p > std::numeric_limits<std::int64_t>::max() / l)
      throw ContractError("KernelSpec: total degree overflows");
    p *= l;
  }
  return p;
}

void to_json(nlohmann::json& j, const KernelSpec& spec) {
  j = nlohmann::json{{"degree_vector", spec.degree_vector}, {"include_constant", spec.include_constant}};
}

void from_json(const nlohmann::json& j, KernelSpec& spec) {
  j.at("degree_vector").get_to(spec.degree_vector);
  spec.include_constant = j.value("include_constant", true);
  spec.validate();
}

double multinomial_sum(double s, int ell, bool include_constant) {
  // sum_{j=0..ell} s^j = 1 + s(1 + s(1 + ...)).
  double acc = 1.0;
  for (int j = 1; j < ell; ++j) acc = 1.0 + s * acc;
  acc *= s;
  return include_constant ? 1.0 + acc : acc;
}

namespace {

void check_dims(const Vector& x, const Vector& y) {
  if (x.size() != y.size())
    throw ContractError("kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()) + ")");
}

}  // namespace

double mk_eval(const Vector& x, const Vector& y, int ell, bool include_constant) {
  check_dims(x, y);
  if (ell < 1) throw ContractError("mk_eval: ell must be >= 1");
  return multinomial_sum(x.dot(y), ell, include_constant);
}

double cmk_from_inner(double inner, const KernelSpec& spec) {
  double s = inner;
  for (int l : spec.degree_vector) s = multinomial_sum(s, l, spec.include_constant);
  if (!std::isfinite(s)) throw RangeError("composed multinomial kernel overflowed");
  return s;
}

double cmk_eval(const Vector& x, const Vector& y, const KernelSpec& spec) {
  check_dims(x, y);
  return cmk_from_inner(x.dot(y), spec);
}

std::optional<std::size_t> feature_map_length(std::size_t d, int ell, bool include_constant,
                                              std::size_t cap) {
  std::size_t total = include_constant ? 1 : 0;
  std::size_t term = 1;
  for (int j = 1; j <= ell; ++j) {
    if (d != 0 && term > cap / d) return std::nullopt;
    term *= d;
    total += term;
    if (total > cap) return std::nullopt;
  }
  return total;
}

Vector explicit_feature_map(const Vector& x, int ell, bool include_constant, std::size_t cap) {
  if (ell < 1) throw ContractError("explicit_feature_map: ell must be >= 1");
  const auto d = static_cast<std::size_t>(x.size());
  auto len = feature_map_length(d, ell, include_constant, cap);
  if (!len) throw ContractError("explicit_feature_map: feature map exceeds cap of " + std::to_string(cap));

  Vector out(static_cast<Eigen::Index>(*len));
  Eigen::Index pos = 0;
  if (include_constant) out(pos++) = 1.0;
  // Tuples of length j, lexicographic: block j is kron(block j-1, x).
  std::vector<double> prev{1.0};
  for (int j = 1; j <= ell; ++j) {
    std::vector<double> cur;
    cur.reserve(prev.size() * d);
    for (double p : prev)
      for (std::size_t i = 0; i < d; ++i) cur.push_back(p * x(static_cast<Eigen::Index>(i)));
    for (double v : cur) out(pos++) = v;
    prev = std::move(cur);
  }
  return out;
}

double GramMatrix::min_eigenvalue() const {
  if (values.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(values, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double GramMatrix::spectral_norm() const {
  if (values.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(values, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

GramMatrix gram_matrix(const PointMatrix& points, const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index n = points.rows();
  Matrix values(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t r) {
    auto i = static_cast<Eigen::Index>(r);
    for (Eigen::Index j = i; j < n; ++j)
      values(i, j) = cmk_from_inner(points.row(i).dot(points.row(j)), spec);
  });
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) values(i, j) = values(j, i);
  return GramMatrix{points, std::move(values)};
}

Matrix kernel_matrix(const PointMatrix& a, const PointMatrix& b, const KernelSpec& spec) {
  spec.validate();
  if (a.cols() != b.cols()) throw ContractError("kernel_matrix: dimension mismatch");
  Matrix out(a.rows(), b.rows());
  parallel_for(static_cast<std::size_t>(a.rows()), [&](std::size_t r) {
    auto i = static_cast<Eigen::Index>(r);
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = cmk_from_inner(a.row(i).dot(b.row(j)), spec);
  });
  return out;
}

}  // namespace tds
