#pragma once

#include "htune/core.hpp"
#include "htune/objectives.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace htune {

/// States whose infinity norm exceeds this bound are reported as diverged.
inline constexpr double kDivergenceBound = 1e8;

inline void guard_divergence(const Vector& v, Step t, const char* what) {
  if (!v.allFinite() || (v.size() > 0 && v.lpNorm<Eigen::Infinity>() > kDivergenceBound)) {
    throw DivergenceError(std::string(what) + " diverged at step " + std::to_string(t), t, v);
  }
}

// ---------------------------------------------------------------------------
// High-order tuner

struct HtState {
  Vector y;
  Vector z;
  std::optional<Vector> last_x;

  static HtState at(const Vector& x0) { return {x0, x0, std::nullopt}; }

  /// x_t = beta z_t + (1 - beta) y_t.
  Vector combine(double beta) const { return beta * z + (1.0 - beta) * y; }
};

struct HtStepResult {
  HtState next;
  Vector x;     // x_t, the point the gradient was taken at
  Vector grad;  // grad f_t(x_t)
};

/// One HT step: x_t = beta z + (1-beta) y, then
///   y_{t+1} = x_t - (mu/N) grad f_t(x_t),   z_{t+1} = z_t - (gamma/N) grad f_t(x_t).
/// Exactly one gradient evaluation.
inline HtStepResult ht_step(const HtState& state, Step t, const TimeVaryingObjective& obj, const HtHyperParams& h) {
  h.validate();
  require_dim(state.y, obj.dim(), "ht_step y");
  require_dim(state.z, obj.dim(), "ht_step z");
  const LearningRates rates = derived_rates(h);

  Vector x = state.combine(h.beta);
  Vector g = obj.grad(t, x);
  guard_divergence(g, t, "HT gradient");

  HtState next;
  next.y = x - rates.alpha * g;
  next.z = state.z - rates.eta * g;
  next.last_x = x;
  guard_divergence(next.y, t, "HT state y");
  guard_divergence(next.z, t, "HT state z");
  return {std::move(next), std::move(x), std::move(g)};
}

/// Prior-art discretization with fixed gamma, beta. The y update uses the
/// gradient of the *next* objective at x_t:
///   y_{t+1} = x_t - (gamma beta / N_t) grad f_{t+1}(x_t),
///   z_{t+1} = z_t - (gamma / N_t) grad f_t(x_t).
/// Two gradient evaluations per step. `grad` in the result is grad f_t(x_t).
inline HtStepResult legacy_ht_step(const HtState& state, Step t, const TimeVaryingObjective& obj, double gamma,
                                   double beta, double normalizer_t) {
  if (!(normalizer_t > 0.0)) throw InvalidHyperParameter("normalizer must be positive");
  if (!(gamma > 0.0)) throw InvalidHyperParameter("gamma must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidHyperParameter("beta must lie in [0, 1]");
  require_dim(state.y, obj.dim(), "legacy_ht_step y");
  require_dim(state.z, obj.dim(), "legacy_ht_step z");

  Vector x = state.combine(beta);
  Vector g_now = obj.grad(t, x);
  Vector g_next = obj.grad(t + 1, x);
  guard_divergence(g_now, t, "legacy HT gradient");
  guard_divergence(g_next, t, "legacy HT gradient");

  HtState next;
  next.y = x - (gamma * beta / normalizer_t) * g_next;
  next.z = state.z - (gamma / normalizer_t) * g_now;
  next.last_x = x;
  guard_divergence(next.y, t, "legacy HT state y");
  guard_divergence(next.z, t, "legacy HT state z");
  return {std::move(next), std::move(x), std::move(g_now)};
}

/// Largest gamma admitted by the prior-art stability constraint,
/// beta (2 - beta) / (16 + beta^2), valid for beta in (0, 1).
inline double legacy_gamma_cap(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidHyperParameter("legacy constraint needs beta in (0, 1)");
  return beta * (2.0 - beta) / (16.0 + beta * beta);
}

// ---------------------------------------------------------------------------
// Gradient descent

/// x - (1/N) g. Shares its arithmetic with ht_step at gamma = mu = beta = 1.
inline Vector apply_gd(const Vector& x, const Vector& g, double normalizer) {
  if (!(normalizer > 0.0)) throw InvalidHyperParameter("normalizer must be positive");
  const double rate = 1.0 / normalizer;
  return x - rate * g;
}

inline Vector gd_step(const Vector& x, Step t, const TimeVaryingObjective& obj, double normalizer) {
  require_dim(x, obj.dim(), "gd_step");
  const Vector g = obj.grad(t, x);
  guard_divergence(g, t, "GD gradient");
  Vector next = apply_gd(x, g, normalizer);
  guard_divergence(next, t, "GD state");
  return next;
}

/// GD with the normalizer tracking the objective's current smoothness bound.
inline Vector tn_gd_step(const Vector& x, Step t, const TimeVaryingObjective& obj) {
  return gd_step(x, t, obj, obj.smoothness_bound(t));
}

// ---------------------------------------------------------------------------
// Nesterov parameterization

/// HT parameters that reproduce Nesterov's method on a fixed objective:
/// mu = 1, gamma = k/2, beta = 2/(k+1). The counter k starts at 1; k = 0 is
/// singular (beta = 2).
inline HtHyperParams nagd_params(Step k, double normalizer) {
  if (k < 1) throw InvalidHyperParameter("Nesterov counter starts at 1");
  const double kd = static_cast<double>(k);
  return {kd / 2.0, 1.0, 2.0 / (kd + 1.0), normalizer};
}

inline std::vector<HtHyperParams> nagd_schedule(Step horizon, double normalizer = 1.0) {
  if (horizon < 1) throw InvalidHyperParameter("Nesterov schedule needs T >= 1");
  std::vector<HtHyperParams> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (Step k = 1; k <= horizon; ++k) out.push_back(nagd_params(k, normalizer));
  return out;
}

// ---------------------------------------------------------------------------
// Adaptive baselines

struct AccumulatorState {
  Vector x;
  Vector grad_sq_sum;  // Adagrad
  Vector m;            // Adam first moment
  Vector v;            // Adam second moment
  Step step_count = 0;

  static AccumulatorState at(const Vector& x0) {
    const auto n = x0.size();
    return {x0, Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0};
  }
};

struct AdagradSettings {
  double alpha = 1.0;
  double eps = 1e-8;
};

struct AdamSettings {
  double alpha = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AccumulatorState apply_adagrad(const AccumulatorState& s, Step t, const Vector& g, const AdagradSettings& cfg) {
  if (!(cfg.alpha > 0.0) || !(cfg.eps > 0.0)) throw InvalidHyperParameter("Adagrad needs alpha > 0 and eps > 0");
  guard_divergence(g, t, "Adagrad gradient");
  AccumulatorState next = s;
  next.grad_sq_sum = s.grad_sq_sum + g.cwiseProduct(g);
  next.x = s.x - cfg.alpha * (g.array() / (next.grad_sq_sum.array().sqrt() + cfg.eps)).matrix();
  next.step_count = s.step_count + 1;
  guard_divergence(next.x, t, "Adagrad state");
  return next;
}

/// Adagrad: accumulate g^2, then x - alpha g / (sqrt(sum g^2) + eps).
inline AccumulatorState adagrad_step(const AccumulatorState& s, Step t, const TimeVaryingObjective& obj, double alpha,
                                     double eps = 1e-8) {
  require_dim(s.x, obj.dim(), "adagrad_step");
  return apply_adagrad(s, t, obj.grad(t, s.x), {alpha, eps});
}

/// Adam with bias-corrected moments and a step decaying as alpha / sqrt(k),
/// where k = step_count + 1 counts the updates made by this optimizer.
inline AccumulatorState apply_adam(const AccumulatorState& s, Step t, const Vector& g, const AdamSettings& cfg) {
  if (!(cfg.alpha > 0.0) || !(cfg.eps > 0.0)) throw InvalidHyperParameter("Adam needs alpha > 0 and eps > 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw InvalidHyperParameter("Adam decay rates must lie in [0, 1)");
  }
  guard_divergence(g, t, "Adam gradient");
  AccumulatorState next = s;
  next.step_count = s.step_count + 1;
  const double k = static_cast<double>(next.step_count);
  next.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * g;
  next.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  const Vector m_hat = next.m / (1.0 - std::pow(cfg.beta1, k));
  const Vector v_hat = next.v / (1.0 - std::pow(cfg.beta2, k));
  const double rate = cfg.alpha / std::sqrt(k);
  next.x = s.x - rate * (m_hat.array() / (v_hat.array().sqrt() + cfg.eps)).matrix();
  guard_divergence(next.x, t, "Adam state");
  return next;
}

inline AccumulatorState adam_step(const AccumulatorState& s, Step t, const TimeVaryingObjective& obj, double alpha,
                                  double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  require_dim(s.x, obj.dim(), "adam_step");
  return apply_adam(s, t, obj.grad(t, s.x), {alpha, beta1, beta2, eps});
}

}  // namespace htune
