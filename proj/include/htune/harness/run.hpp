#pragma once

// Executes an experiment config: steps every optimizer over the horizon,
// evaluates monitors, records divergence, and serializes the trace as CSV.

#include "htune/harness/config.hpp"
#include "htune/metrics.hpp"
#include "htune/optimizers.hpp"
#include "htune/stability.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace htune::harness {

struct RegretColumns {
  Vector x_bar;
  double avg_cost = 0.0;
  double avg_comparator_cost = 0.0;
  double avg_regret = 0.0;
  std::optional<double> avg_pointwise_regret;
};

struct TraceRow {
  Step t = 0;
  std::string optimizer;
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  std::optional<double> V;
  std::optional<double> W;
  std::optional<double> delta_V;
  std::optional<double> decrease_bound;
  bool certified = false;
  bool diverged = false;
  std::optional<RegretColumns> regret;
};

struct MonitorViolation {
  std::string optimizer;
  Step t;
  MonitorVerdict verdict;
};

struct RunTrace {
  std::size_t dim = 0;
  bool regret_columns = false;
  std::vector<TraceRow> rows;
  std::vector<MonitorViolation> violations;

  /// Rows of one optimizer, in step order.
  std::vector<const TraceRow*> rows_for(const std::string& name) const {
    std::vector<const TraceRow*> out;
    for (const auto& r : rows) {
      if (r.optimizer == name) out.push_back(&r);
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Per-step certificates

/// HT-form parameters (gamma, mu, beta, N) an optimizer uses at step t, when
/// it has them. GD is HT at gamma = mu = beta = 1; Nesterov uses k = t + 1.
inline std::optional<HtHyperParams> ht_params_at(const OptimizerSpec& o, const TimeVaryingObjective& obj, Step t) {
  switch (o.kind) {
    case OptimizerKind::HT:
    case OptimizerKind::LegacyHT:
      return HtHyperParams{o.gamma.at(t), o.mu.at(t), beta_at(o, t), normalizer_at(o, obj, t)};
    case OptimizerKind::GD: return HtHyperParams{1.0, 1.0, 1.0, normalizer_at(o, obj, t)};
    case OptimizerKind::NAGD: return nagd_params(t + 1, normalizer_at(o, obj, t));
    case OptimizerKind::Adam:
    case OptimizerKind::Adagrad: return std::nullopt;
  }
  return std::nullopt;
}

struct StepCertificate {
  bool normalizer_ok = false;  // N_t >= L_t
  bool prop1 = false;
  Verdict thm2 = Verdict::Unstable;
  bool cor1 = false;
  bool legacy = false;
  bool certified = false;

  bool operator==(const StepCertificate&) const = default;
};

/// The sufficient conditions that hold for optimizer `o` at step t. For the
/// legacy discretization only its own constraint counts.
inline StepCertificate certificate_at(const OptimizerSpec& o, const TimeVaryingObjective& obj, Step t,
                                      const AnalysisParams& analysis) {
  StepCertificate c;
  const auto h = ht_params_at(o, obj, t);
  if (!h) return c;
  c.normalizer_ok = h->normalizer >= obj.smoothness_bound(t);
  const StabilityCertificate cert =
      check_thm2(h->gamma, h->mu, h->beta, analysis.lambda, analysis.xi, analysis.xi, analysis.epsilon);
  c.prop1 = cert.prop1_ok;
  c.thm2 = cert.thm2;
  c.cor1 = cert.cor1_ok;
  c.legacy = cert.legacy_ok;
  if (o.kind == OptimizerKind::LegacyHT) {
    c.certified = c.normalizer_ok && c.legacy;
  } else {
    c.certified = c.normalizer_ok && (c.prop1 || cert.thm2_ok());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Execution

namespace detail {

/// Uniform view of every optimizer's state for monitoring: (y, z) pairs, with
/// y = z = x for single-state methods.
struct Stepper {
  const OptimizerSpec& spec;
  const TimeVaryingObjective& obj;
  HtState ht;
  AccumulatorState acc;

  Stepper(const OptimizerSpec& s, const TimeVaryingObjective& o)
      : spec(s), obj(o), ht(HtState::at(s.init)), acc(AccumulatorState::at(s.init)) {}

  bool single_state() const { return spec.kind != OptimizerKind::HT && spec.kind != OptimizerKind::NAGD &&
                                     spec.kind != OptimizerKind::LegacyHT; }

  const Vector& y() const { return single_state() ? acc.x : ht.y; }
  const Vector& z() const { return single_state() ? acc.x : ht.z; }

  /// Point at which step t evaluates its gradient.
  Vector query_point(Step t) const {
    if (single_state()) return acc.x;
    const auto h = ht_params_at(spec, obj, t);
    return ht.combine(h->beta);
  }

  /// Advances from step t to t + 1. Throws DivergenceError.
  void advance(Step t) {
    switch (spec.kind) {
      case OptimizerKind::HT:
      case OptimizerKind::NAGD: ht = ht_step(ht, t, obj, *ht_params_at(spec, obj, t)).next; break;
      case OptimizerKind::LegacyHT: {
        const auto h = *ht_params_at(spec, obj, t);
        ht = legacy_ht_step(ht, t, obj, h.gamma, h.beta, h.normalizer).next;
        break;
      }
      case OptimizerKind::GD: acc.x = gd_step(acc.x, t, obj, normalizer_at(spec, obj, t)); break;
      case OptimizerKind::Adam:
        acc = apply_adam(acc, t, obj.grad(t, acc.x), {spec.alpha, spec.beta1, spec.beta2, spec.eps});
        break;
      case OptimizerKind::Adagrad: acc = apply_adagrad(acc, t, obj.grad(t, acc.x), {spec.alpha, spec.eps}); break;
    }
  }
};

}  // namespace detail

/// Runs every optimizer in `cfg` over [0, horizon). Rows are grouped by
/// optimizer (config order) and ordered by t within each group.
inline RunTrace run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto obj_ptr = make_objective(cfg.objective);
  const TimeVaryingObjective& obj = *obj_ptr;
  const bool has_optimum = obj.optimum(0).has_value();
  const bool lyapunov = cfg.monitors.lyapunov && has_optimum;
  const AnalysisParams& an = cfg.analysis;

  RunTrace trace;
  trace.dim = obj.dim();
  trace.regret_columns = cfg.monitors.regret;

  // Comparators shared by every optimizer: x_bar_T for each prefix T = t + 1.
  std::vector<Vector> x_bars;
  std::vector<double> comparator_cost;  // sum_{s<=t} f_s(x_bar_{t+1})
  std::vector<double> pointwise_cost;   // sum_{s<=t} f_s(x*_s)
  if (cfg.monitors.regret) {
    x_bars = prefix_hindsight(obj, cfg.horizon);
    double pw = 0.0;
    for (Step t = 0; t < cfg.horizon; ++t) {
      comparator_cost.push_back(summed_value(obj, t + 1, x_bars[static_cast<std::size_t>(t)]));
      if (has_optimum) pw += obj.value(t, *obj.optimum(t));
      pointwise_cost.push_back(pw);
    }
  }

  for (const auto& spec : cfg.optimizers) {
    detail::Stepper stepper(spec, obj);
    double cumulative = 0.0;
    for (Step t = 0; t < cfg.horizon; ++t) {
      TraceRow row;
      row.t = t;
      row.optimizer = spec.name;
      row.x = stepper.query_point(t);
      row.f = obj.value(t, row.x);
      row.grad_norm = obj.grad(t, row.x).norm();
      cumulative += row.f;

      const StepCertificate cert = cfg.monitors.certificate ? certificate_at(spec, obj, t, an) : StepCertificate{};
      row.certified = cert.certified;

      const Vector y_now = stepper.y(), z_now = stepper.z();
      try {
        stepper.advance(t);
      } catch (const DivergenceError&) {
        row.diverged = true;
        trace.rows.push_back(std::move(row));
        break;
      }

      if (lyapunov) {
        const Vector x_star = *obj.optimum(t);
        const double f_star = obj.value(t, x_star);
        row.V = lyapunov_v(y_now, z_now, x_star);
        row.W = lyapunov_w(y_now, z_now, x_star, an.xi);
        const double v_next = lyapunov_v(stepper.y(), stepper.z(), x_star);
        const double w_next = lyapunov_w(stepper.y(), stepper.z(), x_star, an.xi);
        row.delta_V = v_next - *row.V;

        if (const auto h = ht_params_at(spec, obj, t); h && spec.kind != OptimizerKind::LegacyHT) {
          // The simple condition set bounds the change of V with lambda = 0;
          // otherwise the general set bounds the change of W.
          const bool use_v = cert.prop1 || !cfg.monitors.certificate || cert.thm2 == Verdict::Unstable;
          const DecreaseInputs in{use_v ? *row.V : *row.W,
                                  use_v ? v_next : w_next,
                                  h->gamma,
                                  h->normalizer,
                                  row.f,
                                  f_star,
                                  use_v ? 0.0 : an.lambda};
          const MonitorVerdict verdict = monitor_decrease(in);
          if (!use_v) row.delta_V = verdict.delta;
          row.decrease_bound = verdict.bound;
          if (row.certified && !verdict.holds) trace.violations.push_back({spec.name, t, verdict});
        }
      }

      if (cfg.monitors.regret) {
        const auto i = static_cast<std::size_t>(t);
        const double T = static_cast<double>(t + 1);
        RegretColumns rc;
        rc.x_bar = x_bars[i];
        rc.avg_cost = cumulative / T;
        rc.avg_comparator_cost = comparator_cost[i] / T;
        rc.avg_regret = rc.avg_cost - rc.avg_comparator_cost;
        if (has_optimum) rc.avg_pointwise_regret = (pointwise_cost[i] - comparator_cost[i]) / T;
        row.regret = std::move(rc);
      }
      trace.rows.push_back(std::move(row));
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// CSV

/// Round-trip-safe text for a double: 17 significant digits, signed zero as "0".
inline std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string csv_header(std::size_t dim, bool regret_columns) {
  std::string h = "t,optimizer";
  for (std::size_t i = 0; i < dim; ++i) h += ",x" + std::to_string(i);
  h += ",f,grad_norm,V,W,delta_V,decrease_bound,certified,diverged";
  if (regret_columns) {
    for (std::size_t i = 0; i < dim; ++i) h += ",xbar" + std::to_string(i);
    h += ",avg_cost,avg_comparator_cost,avg_regret,avg_pointwise_regret";
  }
  return h;
}

inline void write_csv(const RunTrace& trace, std::ostream& out) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << csv_header(trace.dim, trace.regret_columns) << '\n';
  for (const auto& r : trace.rows) {
    std::string line = std::to_string(r.t) + "," + r.optimizer;
    for (Eigen::Index i = 0; i < r.x.size(); ++i) line += "," + format_double(r.x[i]);
    line += "," + format_double(r.f) + "," + format_double(r.grad_norm);
    line += "," + opt(r.V) + "," + opt(r.W) + "," + opt(r.delta_V) + "," + opt(r.decrease_bound);
    line += std::string(",") + (r.certified ? "true" : "false") + "," + (r.diverged ? "true" : "false");
    if (trace.regret_columns) {
      if (r.regret) {
        for (Eigen::Index i = 0; i < r.regret->x_bar.size(); ++i) line += "," + format_double(r.regret->x_bar[i]);
        line += "," + format_double(r.regret->avg_cost) + "," + format_double(r.regret->avg_comparator_cost) + "," +
                format_double(r.regret->avg_regret) + "," + opt(r.regret->avg_pointwise_regret);
      } else {
        line += std::string(trace.dim + 4, ',');
      }
    }
    out << line << '\n';
  }
}

inline std::string to_csv(const RunTrace& trace) {
  std::ostringstream out;
  write_csv(trace, out);
  return out.str();
}

inline void write_csv_file(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(trace, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace htune::harness
