#pragma once

#include "htune/core.hpp"
#include "htune/objectives.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace htune {

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, Vector best) : Error(what), best_(std::move(best)) {}
  const Vector& best_iterate() const noexcept { return best_; }

 private:
  Vector best_;
};

inline constexpr double kHindsightTol = 1e-8;

/// Sum over t in [0, T) of f_t(x).
inline double summed_value(const TimeVaryingObjective& obj, Step horizon, const Vector& x) {
  double total = 0.0;
  for (Step t = 0; t < horizon; ++t) total += obj.value(t, x);
  return total;
}

inline Vector summed_grad(const TimeVaryingObjective& obj, Step horizon, const Vector& x) {
  Vector total = Vector::Zero(static_cast<Eigen::Index>(obj.dim()));
  for (Step t = 0; t < horizon; ++t) total += obj.grad(t, x);
  return total;
}

/// Golden-section search for a unimodal scalar function on [lo, hi].
inline double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double tol = 1e-10, int max_iterations = 500) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iterations && (b - a) > tol; ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

namespace detail {

// The derivative of a convex scalar sum is nondecreasing. The tol-stationary
// set {|G| <= tol} is an interval; return its midpoint. On flat sums (balanced
// switching optima) this is the symmetric minimizer rather than whichever
// edge a descent method reaches first.
inline Vector hindsight_scalar(const TimeVaryingObjective& obj, Step horizon, double tol, double start) {
  auto G = [&](double x) { return summed_grad(obj, horizon, Vector::Constant(1, x))[0]; };
  auto fail = [&](const std::string& why, double x) { throw SolverFailure(why, Vector::Constant(1, x)); };

  constexpr int kMaxDoublings = 200;
  double lo = start, hi = start, span = 1.0;
  int n = 0;
  while (!(G(lo) < -tol)) {
    lo = start - span;
    span *= 2.0;
    if (++n > kMaxDoublings || !std::isfinite(lo)) fail("could not bracket the summed gradient from below", start);
  }
  span = 1.0;
  n = 0;
  while (!(G(hi) > tol)) {
    hi = start + span;
    span *= 2.0;
    if (++n > kMaxDoublings || !std::isfinite(hi)) fail("could not bracket the summed gradient from above", start);
  }

  // Left edge: G(a) < -tol <= G(b).
  auto bisect = [&](double a, double b, auto&& is_right) {
    for (int i = 0; i < 400; ++i) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      (is_right(mid) ? b : a) = mid;
    }
    return std::pair{a, b};
  };
  const auto [la, lb] = bisect(lo, hi, [&](double x) { return G(x) >= -tol; });
  const auto [ra, rb] = bisect(lo, hi, [&](double x) { return G(x) > tol; });
  const double left = lb;
  const double right = ra;

  double candidate = 0.5 * (left + right);
  for (double x : {candidate, left, right}) {
    if (std::fabs(G(x)) <= tol) return Vector::Constant(1, x);
  }
  fail("summed gradient did not reach tolerance", candidate);
  return {};
}

inline Vector hindsight_descent(const TimeVaryingObjective& obj, Step horizon, double tol, Vector x,
                                int max_iterations) {
  double total_smoothness = 0.0;
  for (Step t = 0; t < horizon; ++t) total_smoothness += obj.smoothness_bound(t);
  if (!(total_smoothness > 0.0)) throw SolverFailure("summed smoothness bound is zero", x);
  const double step = 1.0 / total_smoothness;
  for (int i = 0; i < max_iterations; ++i) {
    const Vector g = summed_grad(obj, horizon, x);
    if (g.norm() <= tol) return x;
    x -= step * g;
    if (!x.allFinite()) throw SolverFailure("hindsight descent diverged", x);
  }
  throw SolverFailure("hindsight descent exhausted its iteration budget", x);
}

}  // namespace detail

/// argmin_x sum_{t<T} f_t(x), certified by |sum_t grad f_t(x)| <= tol.
///
/// Scalar problems use bracketing and bisection on the monotone summed
/// derivative; higher dimensions use gradient descent with step 1 / sum_t N_t.
inline Vector best_fixed_in_hindsight(const TimeVaryingObjective& obj, Step horizon, double tol = kHindsightTol,
                                      std::optional<Vector> warm_start = std::nullopt,
                                      int max_iterations = 1'000'000) {
  if (horizon < 1) throw UnsupportedMetric("best fixed point needs T >= 1");
  if (!(tol > 0.0)) throw UnsupportedMetric("hindsight tolerance must be positive");
  Vector start = warm_start.value_or(Vector::Zero(static_cast<Eigen::Index>(obj.dim())));
  require_dim(start, obj.dim(), "best_fixed_in_hindsight warm start");
  if (obj.dim() == 1) return detail::hindsight_scalar(obj, horizon, tol, start[0]);
  return detail::hindsight_descent(obj, horizon, tol, std::move(start), max_iterations);
}

struct RegretReport {
  Step horizon = 0;
  Vector x_bar;
  double cumulative_cost = 0.0;
  double comparator_cost = 0.0;
  double regret = 0.0;
  double average_regret = 0.0;
  /// (1/T) sum_t [f_t(x_t) - f_t(x*_t)], when optima are known.
  std::optional<double> pointwise_lower_bound;
  /// (1/T) sum_t [f_t(x*_t) - f_t(x_bar)]: the regret of the pointwise-optimal
  /// sequence, a lower bound on the average regret of any method.
  std::optional<double> pointwise_average_regret;
};

/// Regret of the cost sequence costs[t] = f_t(x_t) over the first T steps
/// against the best fixed point in hindsight. Sums run over t in [0, T).
inline RegretReport regret(std::span<const double> costs, const TimeVaryingObjective& obj, Step horizon,
                           double tol = kHindsightTol, std::optional<Vector> warm_start = std::nullopt) {
  if (horizon < 1) throw UnsupportedMetric("regret needs T >= 1");
  if (costs.size() < static_cast<std::size_t>(horizon)) throw UnsupportedMetric("cost trace shorter than T");
  RegretReport r;
  r.horizon = horizon;
  r.x_bar = best_fixed_in_hindsight(obj, horizon, tol, std::move(warm_start));
  for (Step t = 0; t < horizon; ++t) r.cumulative_cost += costs[static_cast<std::size_t>(t)];
  r.comparator_cost = summed_value(obj, horizon, r.x_bar);
  r.regret = r.cumulative_cost - r.comparator_cost;
  const double T = static_cast<double>(horizon);
  r.average_regret = r.regret / T;

  if (obj.optimum(0)) {
    double pointwise = 0.0;
    for (Step t = 0; t < horizon; ++t) pointwise += obj.value(t, *obj.optimum(t));
    r.pointwise_lower_bound = (r.cumulative_cost - pointwise) / T;
    r.pointwise_average_regret = (pointwise - r.comparator_cost) / T;
  }
  return r;
}

/// Best fixed point for every prefix T = 1..horizon, each warm-started from
/// the previous prefix.
inline std::vector<Vector> prefix_hindsight(const TimeVaryingObjective& obj, Step horizon, double tol = kHindsightTol) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(std::max<Step>(horizon, 0)));
  std::optional<Vector> warm;
  for (Step T = 1; T <= horizon; ++T) {
    out.push_back(best_fixed_in_hindsight(obj, T, tol, warm));
    warm = out.back();
  }
  return out;
}

/// f_t(x_t) - f_t(x*_t) along a trajectory.
inline std::vector<double> optimality_gaps(const TimeVaryingObjective& obj, std::span<const Vector> xs) {
  std::vector<double> gaps;
  gaps.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Step t = static_cast<Step>(i);
    const auto x_star = obj.optimum(t);
    if (!x_star) throw UnsupportedMetric("time_to_epsilon needs a known optimum");
    gaps.push_back(obj.value(t, xs[i]) - obj.value(t, *x_star));
  }
  return gaps;
}

/// For each switch time s, the smallest k such that gaps[t] <= eps for every
/// t in [s + k, next switch). nullopt when the gap is still above eps at the
/// end of the window.
inline std::vector<std::optional<Step>> time_to_epsilon(std::span<const double> gaps,
                                                        std::span<const Step> switch_times, double eps = 1e-2) {
  if (!(eps > 0.0)) throw UnsupportedMetric("time_to_epsilon needs eps > 0");
  const Step n = static_cast<Step>(gaps.size());
  std::vector<std::optional<Step>> out;
  out.reserve(switch_times.size());
  for (std::size_t i = 0; i < switch_times.size(); ++i) {
    const Step s = switch_times[i];
    const Step e = std::min(i + 1 < switch_times.size() ? switch_times[i + 1] : n, n);
    if (s >= e) {
      out.emplace_back(std::nullopt);
      continue;
    }
    Step first_good = e;
    while (first_good > s && gaps[static_cast<std::size_t>(first_good - 1)] <= eps) --first_good;
    if (first_good == e) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(first_good - s);
    }
  }
  return out;
}

inline std::vector<std::optional<Step>> time_to_epsilon(const TimeVaryingObjective& obj, std::span<const Vector> xs,
                                                        std::span<const Step> switch_times, double eps = 1e-2) {
  const auto gaps = optimality_gaps(obj, xs);
  return time_to_epsilon(gaps, switch_times, eps);
}

}  // namespace htune
