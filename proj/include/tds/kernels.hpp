#pragma once

#include "tds/core.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tds {

/// Degree vector (l_1, ..., l_t) of a composed multinomial kernel.
///
/// Level i maps the previous level's kernel value s to sum_{j} s^j for
/// j = 0..l_i (j = 1..l_i when include_constant is false). A single level
/// is the plain multinomial kernel MK_l.
struct KernelSpec {
  std::vector<int> degree_vector{1};
  bool include_constant = true;

  void validate() const;
  std::size_t levels() const { return degree_vector.size(); }
  /// Product of the level degrees; the polynomial degree of the feature map.
  std::int64_t total_degree() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

void to_json(nlohmann::json& j, const KernelSpec& spec);
void from_json(const nlohmann::json& j, KernelSpec& spec);

/// Horner evaluation of sum_{j=j0..ell} s^j.
double multinomial_sum(double s, int ell, bool include_constant = true);

double mk_eval(const Vector& x, const Vector& y, int ell, bool include_constant = true);
double cmk_eval(const Vector& x, const Vector& y, const KernelSpec& spec);

/// Kernel value from a precomputed inner product x.y.
double cmk_from_inner(double inner, const KernelSpec& spec);

/// Default cap on explicit feature-map length.
inline constexpr std::size_t kFeatureMapCap = 1'000'000;

/// psi_ell(x): one entry per tuple in [d]^j, j = 0..ell (j >= 1 without the
/// constant), ordered by tuple length then lexicographically; each entry is
/// the product of the selected coordinates. Oracle use only.
Vector explicit_feature_map(const Vector& x, int ell, bool include_constant = true,
                            std::size_t cap = kFeatureMapCap);

/// Length of explicit_feature_map for dimension d, or nullopt past `cap`.
std::optional<std::size_t> feature_map_length(std::size_t d, int ell, bool include_constant,
                                              std::size_t cap = kFeatureMapCap);

struct GramMatrix {
  PointMatrix points;
  Matrix values;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  /// Smallest eigenvalue, from a symmetric eigensolver.
  double min_eigenvalue() const;
  double spectral_norm() const;
};

/// values(i, j) = cmk_eval(p_i, p_j), each unordered pair evaluated once and mirrored.
GramMatrix gram_matrix(const PointMatrix& points, const KernelSpec& spec);

/// Rectangular kernel matrix with entry (i, j) = K(a_i, b_j).
Matrix kernel_matrix(const PointMatrix& a, const PointMatrix& b, const KernelSpec& spec);

}  // namespace tds
