#pragma once

// Sufficient stability conditions for the HT, Lyapunov candidates, and
// runtime monitors for their decrease bounds.

#include "htune/core.hpp"
#include "htune/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

namespace htune {

/// Coefficients of the quadratic form bounding the change of
/// W_t = |z - x*|^2 + xi_t |y - z|^2 in (grad/N, x - z).
struct CCoefficients {
  double c5;
  double c6;
  double c7;

  /// 4 c5 c7 - c6^2; nonnegative (with c5 < 0) iff the form is negative semidefinite.
  double discriminant() const { return 4.0 * c5 * c7 - c6 * c6; }
};

/// Coefficients given 1/beta_bar^2 directly. Lets callers that know beta_bar
/// in closed form avoid the rounding in 1 - beta.
inline CCoefficients c_coeffs_from_inverse_beta_bar_sq(double gamma, double mu, double inv_beta_bar_sq,
                                                       double lambda, double xi_t, double xi_next) {
  const double d = gamma - mu;
  return {gamma * gamma + xi_next * d * d - (1.0 + lambda) * gamma, 2.0 * (xi_next * d + gamma),
          xi_next - xi_t * inv_beta_bar_sq};
}

class DegenerateBeta : public Error {
 public:
  DegenerateBeta() : Error("beta = 1 makes c7 unbounded (x_t = z_t, the |x - z| term vanishes)") {}
};

/// c5 = gamma^2 + xi'(gamma - mu)^2 - (1 + lambda) gamma
/// c6 = 2 [xi'(gamma - mu) + gamma]
/// c7 = xi' - xi (1 - beta)^{-2}
inline CCoefficients c_coeffs(double gamma, double mu, double beta, double lambda, double xi_t, double xi_next) {
  if (beta == 1.0) throw DegenerateBeta();
  const double bb = 1.0 - beta;
  return c_coeffs_from_inverse_beta_bar_sq(gamma, mu, 1.0 / (bb * bb), lambda, xi_t, xi_next);
}

/// Coefficients under the corollary settings mu = 1, beta = 1/gamma,
/// lambda = 1, xi = 1, using 1/beta_bar^2 = gamma^2 / (gamma - 1)^2.
inline CCoefficients cor1_coeffs(double gamma) {
  if (!(gamma > 1.0)) throw DegenerateBeta();
  const double r = gamma / (gamma - 1.0);
  return c_coeffs_from_inverse_beta_bar_sq(gamma, 1.0, r * r, 1.0, 1.0, 1.0);
}

enum class Verdict { Stable, Unstable, DegenerateStable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::DegenerateStable: return "degenerate-stable";
  }
  return "unknown";
}

struct StabilityCertificate {
  double c5 = 0.0;
  double c6 = 0.0;
  double c7 = 0.0;
  bool c5_negative = false;
  double discriminant = 0.0;
  bool discriminant_ok = false;
  bool prop1_ok = false;
  bool cor1_ok = false;
  bool legacy_ok = false;
  Verdict thm2 = Verdict::Unstable;
  std::string note;

  bool thm2_ok() const { return thm2 != Verdict::Unstable; }
};

inline bool check_prop1(double beta, double mu, double gamma, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidHyperParameter("epsilon must be strictly positive");
  return beta >= 0.0 && beta <= 1.0 && mu >= epsilon && mu <= 1.0 && std::fabs(gamma - 0.5 * mu) <= 1e-12;
}

inline bool check_cor1_settings(double gamma, double mu, double beta) {
  return gamma >= 1.0 && gamma <= 1.5 && mu == 1.0 && std::fabs(beta - 1.0 / gamma) <= 1e-12;
}

inline bool check_legacy(double gamma, double beta) {
  return beta > 0.0 && beta < 1.0 && gamma > 0.0 && gamma <= legacy_gamma_cap(beta);
}

/// Certificate from precomputed coefficients (beta < 1).
inline StabilityCertificate certificate_from(const CCoefficients& c) {
  StabilityCertificate cert;
  cert.c5 = c.c5;
  cert.c6 = c.c6;
  cert.c7 = c.c7;
  cert.c5_negative = c.c5 < 0.0;
  cert.discriminant = c.discriminant();
  cert.discriminant_ok = cert.discriminant >= 0.0;
  cert.thm2 = (cert.c5_negative && cert.discriminant_ok) ? Verdict::Stable : Verdict::Unstable;
  return cert;
}

/// Evaluates the general condition set (c5 < 0 and 4 c5 c7 - c6^2 >= 0) and,
/// alongside it, the simpler condition sets for the same hyper-parameters.
///
/// At beta = 1 the |x - z| term vanishes, c7 is unbounded, and only c5 < 0 is
/// needed; the verdict is then DegenerateStable.
inline StabilityCertificate check_thm2(double gamma, double mu, double beta, double lambda, double xi_t,
                                       double xi_next, double epsilon = AnalysisParams{}.epsilon) {
  StabilityCertificate cert;
  if (beta == 1.0) {
    const CCoefficients c = c_coeffs_from_inverse_beta_bar_sq(gamma, mu, 0.0, lambda, xi_t, xi_next);
    cert.c5 = c.c5;
    cert.c6 = c.c6;
    cert.c7 = -std::numeric_limits<double>::infinity();
    cert.c5_negative = c.c5 < 0.0;
    cert.discriminant = cert.c5_negative ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
    cert.discriminant_ok = cert.c5_negative;
    cert.thm2 = cert.c5_negative ? Verdict::DegenerateStable : Verdict::Unstable;
    cert.note = "beta = 1: x_t = z_t, so the |x_t - z_t| term vanishes";
  } else {
    cert = certificate_from(c_coeffs(gamma, mu, beta, lambda, xi_t, xi_next));
  }
  cert.prop1_ok = check_prop1(beta, mu, gamma, epsilon);
  cert.cor1_ok = check_cor1_settings(gamma, mu, beta);
  cert.legacy_ok = check_legacy(gamma, beta);
  return cert;
}

/// Certificate under the corollary settings for a given gamma >= 1.
inline StabilityCertificate check_cor1(double gamma) {
  if (gamma == 1.0) return check_thm2(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
  StabilityCertificate cert = certificate_from(cor1_coeffs(gamma));
  cert.prop1_ok = false;
  cert.cor1_ok = gamma >= 1.0 && gamma <= 1.5;
  cert.legacy_ok = check_legacy(gamma, 1.0 / gamma);
  return cert;
}

// ---------------------------------------------------------------------------
// Exponential rate for strongly convex objectives

struct RateBound {
  double rho = 0.0;
  double omega = 0.0;
  bool zero_rate = false;  // set when beta = 0 collapses the rate
};

/// rho = (mu/2)(sigma/N) and
/// omega = min{(1 - nu)(1 - bb^2), rho nu (1 - bb^2) / (rho bb^2 + nu (1 - bb^2))}, bb = 1 - beta.
inline RateBound omega(double mu, double sigma, double normalizer, double beta, double nu) {
  if (!(sigma > 0.0)) throw InvalidHyperParameter("strong convexity modulus must be positive");
  if (!(normalizer >= sigma)) throw InvalidHyperParameter("normalizer must be >= sigma");
  if (!(nu > 0.0 && nu < 1.0)) throw InvalidHyperParameter("nu must lie in (0, 1)");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidHyperParameter("beta must lie in [0, 1]");
  RateBound r;
  r.rho = 0.5 * mu * sigma / normalizer;
  const double bb2 = (1.0 - beta) * (1.0 - beta);
  const double one_minus = 1.0 - bb2;
  const double first = (1.0 - nu) * one_minus;
  const double denom = r.rho * bb2 + nu * one_minus;
  const double second = denom > 0.0 ? r.rho * nu * one_minus / denom : 0.0;
  r.omega = std::min(first, second);
  r.zero_rate = r.omega == 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Lyapunov candidates

/// V = |z - x*|^2 + |y - z|^2.
inline double lyapunov_v(const Vector& y, const Vector& z, const Vector& x_star) {
  require_same_dim(y, z, "lyapunov_v");
  require_same_dim(z, x_star, "lyapunov_v");
  return (z - x_star).squaredNorm() + (y - z).squaredNorm();
}

/// W = |z - x*|^2 + xi |y - z|^2.
inline double lyapunov_w(const Vector& y, const Vector& z, const Vector& x_star, double xi) {
  require_same_dim(y, z, "lyapunov_w");
  require_same_dim(z, x_star, "lyapunov_w");
  return (z - x_star).squaredNorm() + xi * (y - z).squaredNorm();
}

/// Candidate used for the prior-art discretization:
/// (|z - x*|^2 + |z - x|^2) / gamma with x = beta z + (1 - beta) y.
inline double legacy_lyapunov(const Vector& y, const Vector& z, const Vector& x_star, double gamma, double beta) {
  require_same_dim(y, z, "legacy_lyapunov");
  require_same_dim(z, x_star, "legacy_lyapunov");
  const Vector x = beta * z + (1.0 - beta) * y;
  return ((z - x_star).squaredNorm() + (z - x).squaredNorm()) / gamma;
}

// ---------------------------------------------------------------------------
// Monitors

struct DecreaseInputs {
  double lyapunov_now;   // V_t (or W_t)
  double lyapunov_next;  // V_{t+1} (or W_{t+1}), evaluated against the same x*
  double gamma;
  double normalizer;
  double f_at_x;      // f_t(x_t)
  double f_at_xstar;  // f_t(x*)
  double lambda = 0.0;
};

struct MonitorVerdict {
  double delta;
  double bound;
  double tolerance;
  bool holds;
};

/// Relative tolerance used by the decrease monitor.
inline constexpr double kMonitorRelTol = 1e-9;

/// Checks Delta <= 2 (1 - lambda)(gamma / N)(f* - f) + 1e-9 (1 + V_t).
/// lambda = 0 is the simple condition set; lambda > 0 the general one (on W).
inline MonitorVerdict monitor_decrease(const DecreaseInputs& in) {
  MonitorVerdict out;
  out.delta = in.lyapunov_next - in.lyapunov_now;
  out.bound = 2.0 * (1.0 - in.lambda) * (in.gamma / in.normalizer) * (in.f_at_xstar - in.f_at_x);
  out.tolerance = kMonitorRelTol * (1.0 + std::fabs(in.lyapunov_now));
  out.holds = out.delta <= out.bound + out.tolerance;
  return out;
}

/// True iff V_{t+1} <= (1 - omega_t) V_t (to 1e-9 relative) for every t.
/// `values` holds V_0..V_n and `rates` at least n entries.
inline bool check_exponential(std::span<const double> values, std::span<const double> rates,
                              double rel_tol = kMonitorRelTol) {
  if (values.size() < 2) return true;
  if (rates.size() + 1 < values.size()) throw ShapeError("check_exponential: need one rate per transition");
  for (std::size_t t = 0; t + 1 < values.size(); ++t) {
    const double allowed = (1.0 - rates[t]) * values[t];
    if (values[t + 1] > allowed + rel_tol * std::fabs(values[t])) return false;
  }
  return true;
}

}  // namespace htune
