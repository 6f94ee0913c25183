#pragma once

// Built-in experiment configs, the gamma sweep of the corollary region, and
// the per-step certificate summary.

#include "htune/harness/config.hpp"
#include "htune/harness/run.hpp"
#include "htune/stability.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace htune::harness {

namespace presets {

inline OptimizerSpec gd(std::string name, Vector init, std::optional<ParamSchedule> normalizer) {
  OptimizerSpec o;
  o.name = std::move(name);
  o.kind = OptimizerKind::GD;
  o.init = std::move(init);
  o.normalizer = std::move(normalizer);
  return o;
}

inline OptimizerSpec nagd(std::string name, Vector init, std::optional<ParamSchedule> normalizer) {
  OptimizerSpec o = gd(std::move(name), std::move(init), std::move(normalizer));
  o.kind = OptimizerKind::NAGD;
  return o;
}

/// HT with mu = 1 and beta = 1/gamma (the corollary family).
inline OptimizerSpec ht(std::string name, Vector init, double gamma, std::optional<ParamSchedule> normalizer) {
  OptimizerSpec o;
  o.name = std::move(name);
  o.kind = OptimizerKind::HT;
  o.init = std::move(init);
  o.normalizer = std::move(normalizer);
  o.gamma = ParamSchedule::constant(gamma);
  o.mu = ParamSchedule::constant(1.0);
  o.beta.reset();
  return o;
}

inline OptimizerSpec adaptive(std::string name, OptimizerKind kind, Vector init, double alpha) {
  OptimizerSpec o;
  o.name = std::move(name);
  o.kind = kind;
  o.init = std::move(init);
  o.alpha = alpha;
  o.normalizer.reset();
  return o;
}

inline std::string gamma_label(double g) {
  std::string s = format_double(g);
  return "HT(gamma=" + s + ")";
}

}  // namespace presets

/// a = 5, b = 7, c: 0 -> 5 at t = 50; GD, NAGD and HT at gamma = 1..10 and
/// 1.5, all with N = 49 and x0 = y0 = z0 = 5.
inline ExperimentConfig fig1_config() {
  ExperimentConfig cfg;
  cfg.objective = LogSumExpSpec{ParamSchedule::constant(5.0), ParamSchedule::constant(7.0),
                                ParamSchedule({{0, 0.0}, {50, 5.0}})};
  cfg.horizon = 100;
  cfg.analysis.lambda = 1.0;
  cfg.analysis.xi = 1.0;
  const Vector x0 = Vector::Constant(1, 5.0);
  const ParamSchedule n = ParamSchedule::constant(49.0);
  cfg.optimizers.push_back(presets::gd("GD", x0, n));
  cfg.optimizers.push_back(presets::nagd("NAGD", x0, n));
  for (int g = 1; g <= 10; ++g) {
    cfg.optimizers.push_back(presets::ht(presets::gamma_label(g), x0, static_cast<double>(g), n));
  }
  cfg.optimizers.push_back(presets::ht(presets::gamma_label(1.5), x0, 1.5, n));
  cfg.output = "fig1.csv";
  return cfg;
}

/// b: 7 -> 21 at t = 50, c = 0, x0 = 7. GD and NAGD keep N = 49; the TN
/// variants and HT switch to N = 441 with the smoothness.
inline ExperimentConfig fig2_config() {
  ExperimentConfig cfg;
  cfg.objective = LogSumExpSpec{ParamSchedule::constant(5.0), ParamSchedule({{0, 7.0}, {50, 21.0}}),
                                ParamSchedule::constant(0.0)};
  cfg.horizon = 250;
  cfg.analysis.lambda = 1.0;
  cfg.analysis.xi = 1.0;
  const Vector x0 = Vector::Constant(1, 7.0);
  const ParamSchedule fixed = ParamSchedule::constant(49.0);
  const ParamSchedule tracking({{0, 49.0}, {50, 441.0}});
  cfg.optimizers.push_back(presets::gd("GD", x0, fixed));
  cfg.optimizers.push_back(presets::nagd("NAGD", x0, fixed));
  cfg.optimizers.push_back(presets::gd("TN-GD", x0, tracking));
  cfg.optimizers.push_back(presets::nagd("TN-NAGD", x0, tracking));
  cfg.optimizers.push_back(presets::ht("HT", x0, 1.5, tracking));
  cfg.output = "fig2.csv";
  return cfg;
}

/// c: 0 -> 5 (t = 50) -> -4 (t = 150) -> 0 (t = 300), a = 5, b = 7, horizon
/// 400. HT (gamma = 1.5, N = 49) against Adam and Adagrad with alpha = 1.
inline ExperimentConfig fig3_config() {
  ExperimentConfig cfg;
  cfg.objective = LogSumExpSpec{ParamSchedule::constant(5.0), ParamSchedule::constant(7.0),
                                ParamSchedule({{0, 0.0}, {50, 5.0}, {150, -4.0}, {300, 0.0}})};
  cfg.horizon = 400;
  cfg.analysis.lambda = 1.0;
  cfg.analysis.xi = 1.0;
  cfg.monitors.regret = true;
  const Vector x0 = Vector::Constant(1, 5.0);
  cfg.optimizers.push_back(presets::ht("HT", x0, 1.5, ParamSchedule::constant(49.0)));
  cfg.optimizers.push_back(presets::adaptive("Adam", OptimizerKind::Adam, x0, 1.0));
  cfg.optimizers.push_back(presets::adaptive("Adagrad", OptimizerKind::Adagrad, x0, 1.0));
  cfg.output = "fig3.csv";
  return cfg;
}

/// Streaming regression with data [1, 0] before tau and [0, 1] after; every
/// method starts at the origin.
inline ExperimentConfig example1_config(Step tau = 100) {
  if (tau < 1) throw ConfigError("tau must be >= 1");
  ExperimentConfig cfg;
  Vector first(2), second(2);
  first << 1.0, 0.0;
  second << 0.0, 1.0;
  cfg.objective = SwitchingRegressionSpec{VectorSchedule({{0, first}, {tau, second}}), Vector::Ones(2)};
  cfg.horizon = tau + 200;
  const Vector x0 = Vector::Zero(2);
  const ParamSchedule n = ParamSchedule::constant(2.0);
  cfg.optimizers.push_back(presets::gd("GD", x0, n));
  cfg.optimizers.push_back(presets::nagd("NAGD", x0, n));
  cfg.optimizers.push_back(presets::ht("HT", x0, 1.5, n));
  cfg.optimizers.push_back(presets::adaptive("Adam", OptimizerKind::Adam, x0, 1.0));
  cfg.optimizers.push_back(presets::adaptive("Adagrad", OptimizerKind::Adagrad, x0, 1.0));
  cfg.output = "example1.csv";
  return cfg;
}

inline std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3", "example1"}; }

inline ExperimentConfig preset(const std::string& name, Step tau = 100) {
  if (name == "fig1") return fig1_config();
  if (name == "fig2") return fig2_config();
  if (name == "fig3") return fig3_config();
  if (name == "example1") return example1_config(tau);
  throw ConfigError("unknown preset '" + name + "' (expected fig1, fig2, fig3 or example1)");
}

// ---------------------------------------------------------------------------
// Gamma sweep

struct SweepRow {
  double gamma;
  double c5;
  double c6;
  double c7;
  double discriminant;
  bool stable;
};

/// Evaluates the general condition set under mu = 1, beta = 1/gamma,
/// lambda = 1, xi = 1 on gamma_k = gamma_min + k (gamma_max - gamma_min)/(steps - 1).
inline std::vector<SweepRow> sweep_gamma(double gamma_min, double gamma_max, int steps) {
  if (!(gamma_min >= 1.0) || !(gamma_max > gamma_min)) {
    throw InvalidHyperParameter("sweep needs 1 <= gamma_min < gamma_max");
  }
  if (steps < 2) throw InvalidHyperParameter("sweep needs at least 2 grid points");
  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(steps));
  const double h = (gamma_max - gamma_min) / static_cast<double>(steps - 1);
  for (int k = 0; k < steps; ++k) {
    const double g = k + 1 == steps ? gamma_max : gamma_min + k * h;
    const StabilityCertificate c = check_cor1(g);
    rows.push_back({g, c.c5, c.c6, c.c7, c.discriminant, c.thm2_ok()});
  }
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "gamma,c5,c6,c7,discriminant,stable\n";
  for (const auto& r : rows) {
    out << format_double(r.gamma) << ',' << format_double(r.c5) << ',' << format_double(r.c6) << ','
        << format_double(r.c7) << ',' << format_double(r.discriminant) << ',' << (r.stable ? "true" : "false")
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Certificate summary

struct CertificateSpan {
  std::string optimizer;
  Step first;
  Step last;  // inclusive
  StepCertificate certificate;
};

/// Consecutive steps with identical certificates, per optimizer.
inline std::vector<CertificateSpan> certify(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto obj = make_objective(cfg.objective);
  std::vector<CertificateSpan> spans;
  for (const auto& o : cfg.optimizers) {
    for (Step t = 0; t < cfg.horizon; ++t) {
      const StepCertificate c = certificate_at(o, *obj, t, cfg.analysis);
      if (!spans.empty() && spans.back().optimizer == o.name && spans.back().certificate == c) {
        spans.back().last = t;
      } else {
        spans.push_back({o.name, t, t, c});
      }
    }
  }
  return spans;
}

inline void write_certificate_summary(const std::vector<CertificateSpan>& spans, std::ostream& out) {
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  for (const auto& s : spans) {
    const auto& c = s.certificate;
    out << s.optimizer << "  t=" << s.first << ".." << s.last << "  N>=L:" << yn(c.normalizer_ok)
        << "  simple:" << yn(c.prop1) << "  general:" << to_string(c.thm2) << "  corollary:" << yn(c.cor1)
        << "  legacy:" << yn(c.legacy) << "  certified:" << yn(c.certified) << '\n';
  }
}

}  // namespace htune::harness
