#pragma once

// Numerical verification oracles for objectives: finite-difference gradients,
// a Hessian-trace smoothness estimate, and sampled convex-analysis inequalities.

#include "htune/objectives.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <vector>

namespace htune {

inline constexpr double kDefaultFdStep = 1e-6;
inline constexpr double kProbeSlack = 1e-9;

/// Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / (2h).
inline Vector fd_gradient(const TimeVaryingObjective& obj, Step t, const Vector& x, double h = kDefaultFdStep) {
  if (!(h > 0.0)) throw EstimationFailure("finite-difference step must be positive");
  require_dim(x, obj.dim(), "fd_gradient");
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = obj.value(t, probe);
    probe[i] = x[i] - h;
    const double down = obj.value(t, probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Trace of the Hessian at x from central differences of the gradient. The
/// trace bounds the largest Hessian eigenvalue, so it is a candidate N_t.
inline double hessian_trace_bound(const TimeVaryingObjective& obj, Step t, const Vector& x, double h = 1e-5) {
  if (!(h > 0.0)) throw EstimationFailure("finite-difference step must be positive");
  require_dim(x, obj.dim(), "hessian_trace_bound");
  double trace = 0.0;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = obj.grad(t, probe)[i];
    probe[i] = x[i] - h;
    const double down = obj.grad(t, probe)[i];
    probe[i] = x[i];
    trace += (up - down) / (2.0 * h);
  }
  if (!std::isfinite(trace)) throw EstimationFailure("non-finite Hessian trace estimate");
  return trace;
}

struct ProbeCheck {
  std::string name;
  double slack;  // >= 0 when the inequality holds
  bool passed;
};

struct ProbeReport {
  std::vector<ProbeCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const ProbeCheck& c) { return c.passed; });
  }

  const ProbeCheck* find(const std::string& name) const {
    auto it = std::find_if(checks.begin(), checks.end(), [&](const ProbeCheck& c) { return c.name == name; });
    return it == checks.end() ? nullptr : &*it;
  }
};

/// Lower bound on grad_t(x)^T (x - x*) interpolated between the optimality-gap
/// and gradient-norm forms:
///   grad^T (x* - x) <= (1 - lambda)(f* - f(x)) - (1 + lambda)/(2L) |grad|^2.
/// Returns the slack of that inequality (>= 0 when it holds).
inline double interpolated_gap_slack(double f_x, double f_star, const Vector& g, const Vector& x,
                                     const Vector& x_star, double L, double lambda) {
  return (1.0 - lambda) * (f_star - f_x) - (1.0 + lambda) / (2.0 * L) * g.squaredNorm() - g.dot(x_star - x);
}

/// Evaluates the standard smooth / strongly convex inequalities on the pair
/// (x, y) at step t. Pairwise inequalities are checked in both orders and the
/// smaller slack is reported. Failures are data, not exceptions.
inline ProbeReport convexity_probe(const TimeVaryingObjective& obj, Step t, const Vector& x, const Vector& y,
                                   double tolerance = kProbeSlack) {
  require_dim(x, obj.dim(), "convexity_probe x");
  require_dim(y, obj.dim(), "convexity_probe y");

  ProbeReport report;
  auto add = [&](std::string name, double slack) {
    report.checks.push_back({std::move(name), slack, slack >= -tolerance});
  };

  const double L = obj.smoothness_bound(t);
  const auto sigma = obj.strong_convexity(t);
  const auto x_star = obj.optimum(t);

  const double fx = obj.value(t, x), fy = obj.value(t, y);
  const Vector gx = obj.grad(t, x), gy = obj.grad(t, y);
  const Vector dxy = x - y;
  const Vector dg = gx - gy;
  const double inner = dg.dot(dxy);

  auto first_order = [](double fa, double fb, const Vector& ga, const Vector& a, const Vector& b) {
    return fb - fa - ga.dot(b - a);
  };
  add("first_order_convexity", std::min(first_order(fx, fy, gx, x, y), first_order(fy, fx, gy, y, x)));

  auto smooth_upper = [L](double fa, double fb, const Vector& ga, const Vector& a, const Vector& b) {
    return fa + ga.dot(b - a) + 0.5 * L * (b - a).squaredNorm() - fb;
  };
  add("smoothness_upper_bound", std::min(smooth_upper(fx, fy, gx, x, y), smooth_upper(fy, fx, gy, y, x)));

  add("co_coercivity", inner - dg.squaredNorm() / L);

  auto smooth_convex_gap = [L](double fa, double fb, const Vector& ga, const Vector& gb, const Vector& a,
                               const Vector& b) { return ga.dot(a - b) - (ga - gb).squaredNorm() / (2.0 * L) - (fa - fb); };
  add("smooth_convex_gap",
      std::min(smooth_convex_gap(fx, fy, gx, gy, x, y), smooth_convex_gap(fy, fx, gy, gx, y, x)));

  if (sigma) {
    const double s = *sigma;
    add("strong_monotonicity", inner - s * dxy.squaredNorm());
    add("strong_co_coercivity", inner - s * L / (s + L) * dxy.squaredNorm() - dg.squaredNorm() / (s + L));
  }

  if (x_star) {
    const double f_star = obj.value(t, *x_star);
    double grad_lower = 0.0, dist_upper = 0.0, corollary = 0.0;
    std::array<double, 3> interpolated{};
    double identity_gap = 0.0;
    double strong_grad_upper = 0.0, strong_dist_lower = 0.0;
    bool first = true;
    for (const auto* p : {&x, &y}) {
      const Vector& pt = *p;
      const double f = obj.value(t, pt);
      const Vector g = obj.grad(t, pt);
      const double gap = f - f_star;
      const double dist2 = (pt - *x_star).squaredNorm();
      const double c = f_star - f - g.squaredNorm() / (2.0 * L) - g.dot(*x_star - pt);
      const std::array<double, 3> lambdas{0.0, 0.5, 1.0};
      std::array<double, 3> interp{};
      for (std::size_t k = 0; k < lambdas.size(); ++k) {
        interp[k] = interpolated_gap_slack(f, f_star, g, pt, *x_star, L, lambdas[k]);
      }
      auto take_min = [&](double& acc, double v) { acc = first ? v : std::min(acc, v); };
      take_min(grad_lower, gap - g.squaredNorm() / (2.0 * L));
      take_min(dist_upper, 0.5 * L * dist2 - gap);
      take_min(corollary, c);
      for (std::size_t k = 0; k < lambdas.size(); ++k) take_min(interpolated[k], interp[k]);
      // lambda = 0 must reproduce the corollary exactly (up to rounding).
      const double scale = 1.0 + std::fabs(c);
      take_min(identity_gap, 1e-12 * scale - std::fabs(interp[0] - c));
      if (sigma) {
        take_min(strong_grad_upper, g.squaredNorm() / (2.0 * *sigma) - gap);
        take_min(strong_dist_lower, gap - 0.5 * *sigma * dist2);
      }
      first = false;
    }
    add("suboptimality_gradient_lower", grad_lower);
    add("suboptimality_distance_upper", dist_upper);
    add("optimum_gap_bound", corollary);
    add("interpolated_gap_bound_lambda_0", interpolated[0]);
    add("interpolated_gap_bound_lambda_0.5", interpolated[1]);
    add("interpolated_gap_bound_lambda_1", interpolated[2]);
    add("interpolation_identity_lambda_0", identity_gap);
    if (sigma) {
      add("strong_suboptimality_gradient_upper", strong_grad_upper);
      add("strong_suboptimality_distance_lower", strong_dist_lower);
    }
  }
  return report;
}

}  // namespace htune
