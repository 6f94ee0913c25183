#pragma once

#include "htune/core.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace htune {

/// A convex objective f_t that changes with the step index.
///
/// Implementations must be safe to evaluate concurrently; every method is
/// const and objectives are immutable after construction.
class TimeVaryingObjective {
 public:
  virtual ~TimeVaryingObjective() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(Step t, const Vector& x) const = 0;
  virtual Vector grad(Step t, const Vector& x) const = 0;

  /// An upper bound N_t >= L_t on the gradient Lipschitz constant at step t.
  virtual double smoothness_bound(Step t) const = 0;

  virtual std::optional<double> strong_convexity(Step /*t*/) const { return std::nullopt; }
  virtual std::optional<Vector> optimum(Step /*t*/) const { return std::nullopt; }

  /// Steps at which the objective switches; used to segment convergence metrics.
  virtual std::vector<Step> change_points() const { return {}; }
};

// ---------------------------------------------------------------------------
// Log-sum-exp bowl

/// log cosh(u) without overflow: |u| + log1p(exp(-2|u|)) - log 2.
inline double log_cosh(double u) {
  const double a = std::fabs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

/// log(a e^{-b(x-c)} + a e^{b(x-c)}), evaluated as log(2a) + log cosh(b(x-c)).
inline double lse_value(double a, double b, double c, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidObjective("log-sum-exp needs a > 0 and b > 0");
  return std::log(2.0 * a) + log_cosh(b * (x - c));
}

inline double lse_grad(double b, double c, double x) {
  if (!(b > 0.0)) throw InvalidObjective("log-sum-exp needs b > 0");
  return b * std::tanh(b * (x - c));
}

/// One-dimensional f_t(x) = log(a_t e^{-b_t(x-c_t)} + a_t e^{b_t(x-c_t)}).
/// Smoothness b_t^2, minimizer c_t, minimum value log(2 a_t).
class LogSumExpObjective final : public TimeVaryingObjective {
 public:
  LogSumExpObjective(ParamSchedule a, ParamSchedule b, ParamSchedule c)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    for (const auto& seg : a_.segments()) {
      if (!(seg.value > 0.0)) throw InvalidObjective("log-sum-exp a_t must be positive");
    }
    for (const auto& seg : b_.segments()) {
      if (!(seg.value > 0.0)) throw InvalidObjective("log-sum-exp b_t must be positive");
    }
  }

  std::size_t dim() const override { return 1; }

  double value_at(Step t, double x) const { return lse_value(a_.at(t), b_.at(t), c_.at(t), x); }
  double grad_at(Step t, double x) const { return lse_grad(b_.at(t), c_.at(t), x); }

  double value(Step t, const Vector& x) const override {
    require_dim(x, 1, "log-sum-exp value");
    return value_at(t, x[0]);
  }

  Vector grad(Step t, const Vector& x) const override {
    require_dim(x, 1, "log-sum-exp grad");
    return Vector::Constant(1, grad_at(t, x[0]));
  }

  double smoothness_bound(Step t) const override {
    const double b = b_.at(t);
    return b * b;
  }

  std::optional<Vector> optimum(Step t) const override { return Vector::Constant(1, c_.at(t)); }

  std::vector<Step> change_points() const override { return merged_change_points(a_, b_, c_); }

  double min_value(Step t) const { return std::log(2.0 * a_.at(t)); }

  const ParamSchedule& a() const noexcept { return a_; }
  const ParamSchedule& b() const noexcept { return b_; }
  const ParamSchedule& c() const noexcept { return c_; }

 private:
  ParamSchedule a_;
  ParamSchedule b_;
  ParamSchedule c_;
};

inline double lse_value(const LogSumExpObjective& obj, Step t, double x) { return obj.value_at(t, x); }
inline double lse_grad(const LogSumExpObjective& obj, Step t, double x) { return obj.grad_at(t, x); }

// ---------------------------------------------------------------------------
// Streaming regression

/// f_t(x) = (1 - D_t^T x)^2 with a switching data vector D_t.
class SwitchingRegression final : public TimeVaryingObjective {
 public:
  explicit SwitchingRegression(VectorSchedule data, std::optional<Vector> common_optimum = std::nullopt)
      : data_(std::move(data)), optimum_(std::move(common_optimum)) {
    dim_ = static_cast<std::size_t>(data_.segments().front().value.size());
    if (dim_ == 0) throw InvalidObjective("regression data vectors must be non-empty");
    for (const auto& seg : data_.segments()) {
      require_dim(seg.value, dim_, "regression data vector");
      if (!seg.value.allFinite()) throw InvalidObjective("regression data must be finite");
    }
    if (optimum_) {
      require_dim(*optimum_, dim_, "regression optimum");
      for (const auto& seg : data_.segments()) {
        if (std::fabs(1.0 - seg.value.dot(*optimum_)) > 1e-12) {
          throw InvalidObjective("declared optimum does not zero every regression residual");
        }
      }
    }
  }

  /// Data [1, 0] for t < tau, then [0, 1]; [1, 1] is optimal throughout.
  static SwitchingRegression streaming_example(Step tau) {
    if (tau < 1) throw InvalidObjective("switch step tau must be >= 1");
    Vector first(2), second(2);
    first << 1.0, 0.0;
    second << 0.0, 1.0;
    return SwitchingRegression(VectorSchedule({{0, first}, {tau, second}}), Vector::Ones(2));
  }

  std::size_t dim() const override { return dim_; }

  const Vector& data(Step t) const { return data_.at(t); }

  double value(Step t, const Vector& x) const override {
    require_dim(x, dim_, "regression value");
    const double r = 1.0 - data_.at(t).dot(x);
    return r * r;
  }

  Vector grad(Step t, const Vector& x) const override {
    require_dim(x, dim_, "regression grad");
    const Vector& d = data_.at(t);
    return (-2.0 * (1.0 - d.dot(x))) * d;
  }

  double smoothness_bound(Step t) const override { return 2.0 * data_.at(t).squaredNorm(); }

  std::optional<Vector> optimum(Step) const override { return optimum_; }

  std::vector<Step> change_points() const override { return data_.change_points(); }

 private:
  VectorSchedule data_;
  std::optional<Vector> optimum_;
  std::size_t dim_ = 0;
};

inline Vector regression_grad(const SwitchingRegression& obj, Step t, const Vector& x) { return obj.grad(t, x); }

// ---------------------------------------------------------------------------
// Diagonal quadratic

/// f_t(x) = 1/2 sum_i d_i (x_i - c_{t,i})^2. Strongly convex with modulus min(d).
class DiagonalQuadratic final : public TimeVaryingObjective {
 public:
  DiagonalQuadratic(Vector weights, VectorSchedule center)
      : weights_(std::move(weights)), center_(std::move(center)) {
    if (weights_.size() == 0) throw InvalidObjective("quadratic weights must be non-empty");
    if (!(weights_.array() > 0.0).all() || !weights_.allFinite()) {
      throw InvalidObjective("quadratic weights must be positive and finite");
    }
    for (const auto& seg : center_.segments()) require_dim(seg.value, dim(), "quadratic center");
  }

  DiagonalQuadratic(Vector weights, Vector center)
      : DiagonalQuadratic(std::move(weights), VectorSchedule::constant(std::move(center))) {}

  std::size_t dim() const override { return static_cast<std::size_t>(weights_.size()); }

  double value(Step t, const Vector& x) const override {
    require_dim(x, dim(), "quadratic value");
    return 0.5 * (weights_.array() * (x - center_.at(t)).array().square()).sum();
  }

  Vector grad(Step t, const Vector& x) const override {
    require_dim(x, dim(), "quadratic grad");
    return (weights_.array() * (x - center_.at(t)).array()).matrix();
  }

  double smoothness_bound(Step) const override { return weights_.maxCoeff(); }
  std::optional<double> strong_convexity(Step) const override { return weights_.minCoeff(); }
  std::optional<Vector> optimum(Step t) const override { return center_.at(t); }
  std::vector<Step> change_points() const override { return center_.change_points(); }

  const Vector& weights() const noexcept { return weights_; }

 private:
  Vector weights_;
  VectorSchedule center_;
};

}  // namespace htune
