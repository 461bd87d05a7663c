#include "tds/core.hpp"

#include <cmath>

namespace tds {

namespace {

void check_finite(const PointMatrix& x) {
  if (!x.allFinite()) throw ContractError("dataset features must be finite");
}

}  // namespace

Dataset::Dataset(PointMatrix features) : x_(std::move(features)) {
  if (x_.cols() <= 0) throw ContractError("dataset dimension must be positive");
  check_finite(x_);
}

Dataset::Dataset(PointMatrix features, Vector labels) : Dataset(std::move(features)) {
  if (labels.size() != x_.rows())
    throw ContractError("label count " + std::to_string(labels.size()) + " does not match " +
                        std::to_string(x_.rows()) + " samples");
  if (!labels.allFinite()) throw ContractError("dataset labels must be finite");
  y_ = std::move(labels);
}

Dataset Dataset::from_samples(std::size_t dim, std::span<const LabeledSample> samples) {
  PointMatrix x(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(dim));
  bool labeled = !samples.empty() && samples.front().y.has_value();
  Vector y(labeled ? static_cast<Eigen::Index>(samples.size()) : 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (static_cast<std::size_t>(s.x.size()) != dim)
      throw ContractError("sample " + std::to_string(i) + " has dimension " +
                          std::to_string(s.x.size()) + ", expected " + std::to_string(dim));
    if (s.y.has_value() != labeled)
      throw ContractError("dataset mixes labeled and unlabeled samples");
    x.row(static_cast<Eigen::Index>(i)) = s.x.transpose();
    if (labeled) y(static_cast<Eigen::Index>(i)) = *s.y;
  }
  if (labeled) return Dataset(std::move(x), std::move(y));
  return Dataset(std::move(x));
}

double Dataset::y(std::size_t i) const { return labels()(static_cast<Eigen::Index>(i)); }

LabeledSample Dataset::sample(std::size_t i) const {
  LabeledSample s{x(i), std::nullopt};
  if (y_) s.y = (*y_)(static_cast<Eigen::Index>(i));
  return s;
}

const Vector& Dataset::labels() const {
  if (!y_) throw ContractError("dataset is unlabeled");
  return *y_;
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw ContractError("slice out of range");
  auto b = static_cast<Eigen::Index>(begin);
  auto n = static_cast<Eigen::Index>(count);
  PointMatrix x = x_.middleRows(b, n);
  if (y_) return Dataset(std::move(x), y_->segment(b, n));
  return Dataset(std::move(x));
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) throw ContractError("cannot concatenate datasets of different dimension");
  PointMatrix x(a.x_.rows() + b.x_.rows(), a.x_.cols());
  x << a.x_, b.x_;
  if (a.labeled() && b.labeled()) {
    Vector y(x.rows());
    y << *a.y_, *b.y_;
    return Dataset(std::move(x), std::move(y));
  }
  return Dataset(std::move(x));
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.x_.rows() != b.x_.rows() || a.x_.cols() != b.x_.cols()) return false;
  if (a.labeled() != b.labeled()) return false;
  if (a.x_ != b.x_) return false;
  return !a.labeled() || *a.y_ == *b.y_;
}

void TdsParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ContractError(std::string("TdsParams: ") + what);
  };
  require(epsilon > 0 && epsilon < 1, "epsilon must lie in (0,1)");
  require(delta > 0 && delta < 1, "delta must lie in (0,1)");
  require(M >= 1, "M must be >= 1");
  require(R >= 1, "R must be >= 1");
  require(B >= 1, "B must be >= 1");
  require(A >= 1, "A must be >= 1");
  require(C >= 1, "C must be >= 1");
  require(ell_hc >= 1, "ell_hc must be a positive integer");
  require(gamma > 0 && gamma <= 1, "gamma must lie in (0,1]");
  if (scale_mode == ScaleMode::desk) require(desk_m >= 1 && desk_n >= 1, "desk sizes must be positive");
}

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::RadiusViolation: return "RadiusViolation";
    case RejectReason::SpectralShift: return "SpectralShift";
    case RejectReason::MomentShift: return "MomentShift";
  }
  return "Unknown";
}

RejectReason reject_reason_from_string(const std::string& s) {
  if (s == "RadiusViolation") return RejectReason::RadiusViolation;
  if (s == "SpectralShift") return RejectReason::SpectralShift;
  if (s == "MomentShift") return RejectReason::MomentShift;
  throw ContractError("unknown reject reason: " + s);
}

double squared_loss(const Evaluator& h, const Dataset& data) {
  if (data.empty()) throw ContractError("squared_loss: empty dataset");
  if (!data.labeled()) throw ContractError("squared_loss: dataset is unlabeled");
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double r = data.y(i) - h(data.x(i));
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(data.size()));
}

double l2_distance(const Evaluator& f, const Evaluator& g, const Dataset& data) {
  if (data.empty()) throw ContractError("l2_distance: empty dataset");
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Vector x = data.x(i);
    double r = f(x) - g(x);
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(data.size()));
}

double clip(double t, double M) {
  if (!(M >= 0)) throw ContractError("clip: M must be >= 0");
  if (std::abs(t) <= M) return t;
  return t > 0 ? M : -M;
}

Dataset clip_labels(const Dataset& data, double M) {
  if (!(M > 0)) throw ContractError("clip_labels: M must be positive");
  Vector y = data.labels();
  for (auto& v : y) v = clip(v, M);
  return data.with_labels(std::move(y));
}

}  // namespace tds
