#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tds {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// One point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Violated precondition or invariant of a public operation.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value left the representable range (e.g. kernel overflow to +Inf).
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// A numerical routine could not produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A finite sample source ran out of points.
class SourceExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledSample {
  Vector x;
  std::optional<double> y;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Immutable set of feature vectors in R^d, optionally labeled.
///
/// Features are stored row-major so that a sample is a contiguous row.
/// Construction validates the invariants: positive dimension, finite entries,
/// and one label per row when labeled.
class Dataset {
 public:
  explicit Dataset(PointMatrix features);
  Dataset(PointMatrix features, Vector labels);

  static Dataset from_samples(std::size_t dim, std::span<const LabeledSample> samples);

  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  bool empty() const { return x_.rows() == 0; }
  bool labeled() const { return y_.has_value(); }

  Vector x(std::size_t i) const { return x_.row(static_cast<Eigen::Index>(i)).transpose(); }
  double y(std::size_t i) const;
  LabeledSample sample(std::size_t i) const;

  const PointMatrix& features() const { return x_; }
  const Vector& labels() const;

  Dataset without_labels() const { return Dataset(x_); }
  Dataset with_labels(Vector labels) const { return Dataset(x_, std::move(labels)); }
  /// Rows [begin, begin + count).
  Dataset slice(std::size_t begin, std::size_t count) const;
  /// Rows of `a` followed by rows of `b`; labeled only if both are.
  static Dataset concat(const Dataset& a, const Dataset& b);

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  PointMatrix x_;
  std::optional<Vector> y_;
};

/// Real-valued function of a feature vector.
using Evaluator = std::function<double(const Vector&)>;

/// Hypothesis emitted on acceptance.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double operator()(const Vector& x) const = 0;
  virtual std::string describe() const = 0;
};
using Hypothesis = std::shared_ptr<const Predictor>;

enum class ScaleMode { strict, desk };

struct TdsParams {
  double epsilon = 0.1;
  double delta = 0.1;
  double M = 1.0;  // label bound
  double R = 1.0;  // radius
  double B = 1.0;  // representation norm bound
  double A = 1.0;  // sup of K(x, x) on the ball
  double C = 1.0;  // hypercontractivity constant
  int ell_hc = 1;  // hypercontractivity degree
  double gamma = 1.0;
  ScaleMode scale_mode = ScaleMode::desk;
  // Desk-mode sample sizes.
  std::size_t desk_m = 200;
  std::size_t desk_n = 2000;

  /// Throws ContractError when a field is outside its domain.
  void validate() const;
};

enum class RejectReason { RadiusViolation, SpectralShift, MomentShift };

std::string to_string(RejectReason reason);
RejectReason reject_reason_from_string(const std::string& s);

struct Reject {
  RejectReason reason;
  std::string detail;
};

struct Accept {
  Hypothesis hypothesis;
};

/// Exactly one of Reject / Accept.
using TdsOutcome = std::variant<Reject, Accept>;

inline bool accepted(const TdsOutcome& o) { return std::holds_alternative<Accept>(o); }

/// Empirical squared loss sqrt(mean (y - h(x))^2).
double squared_loss(const Evaluator& h, const Dataset& data);

/// Empirical L2 distance sqrt(mean (f(x) - g(x))^2); labels ignored.
double l2_distance(const Evaluator& f, const Evaluator& g, const Dataset& data);

/// t if |t| <= M, else M * sign(t).
double clip(double t, double M);

Dataset clip_labels(const Dataset& data, double M);

}  // namespace tds
