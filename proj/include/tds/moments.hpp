#pragma once

#include "tds/core.hpp"
#include "tds/polynomial.hpp"
#include "tds/scenarios.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace tds {

/// Sample mean of x^alpha.
double empirical_moment(const Dataset& data, const MultiIndex& alpha);

/// Sample means of every monomial in `set`, in index order.
Vector empirical_moments(const Dataset& data, const MultiIndexSet& set);

enum class ReferenceMode { analytic, empirical };

struct ReferenceMoments {
  MultiIndexSet set;
  Vector values;
  ReferenceMode mode = ReferenceMode::analytic;
  std::size_t sample_size = 0;  // empirical mode only

  /// Value for alpha; throws ContractError when alpha is not covered.
  double at(const MultiIndex& alpha) const;
};

/// Exact moments of a product marginal: Gaussian (any mean and scale) or
/// uniform cube, including axis_scale and shift. Other variants throw
/// ContractError.
ReferenceMoments reference_moments(const MarginalSpec& marginal, int max_total_degree);

/// Moments of a held-out sample drawn from the reference distribution.
ReferenceMoments reference_moments_empirical(const Dataset& held_out, int max_total_degree);

/// Whether reference_moments supports the marginal analytically.
bool has_analytic_moments(const MarginalSpec& marginal);

/// E[(mu + s Z)^p] for standard Gaussian Z.
double gaussian_moment(int p, double mean = 0.0, double scale = 1.0);
/// E[(c + s U)^p] for U uniform on [-a, a].
double uniform_moment(int p, double half_width, double shift = 0.0, double scale = 1.0);

struct MomentReport {
  double max_abs_deviation = 0.0;
  MultiIndex offending_alpha;
  double Delta = 0.0;
  int degree_checked = 0;
  bool passed = true;
};

/// Compares every empirical moment up to max_total_degree against the
/// reference and passes iff all deviations are at most Delta.
MomentReport moment_test(const Dataset& test_data, const ReferenceMoments& reference, int max_total_degree,
                         double Delta);

std::string to_string(ReferenceMode mode);
void to_json(nlohmann::json& j, const MomentReport& r);

}  // namespace tds
