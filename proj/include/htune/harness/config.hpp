#pragma once

// Experiment configuration: the JSON schema, its validation, and conversion
// of objective specs into live objectives.

#include "htune/core.hpp"
#include "htune/objectives.hpp"

#include <json.hpp>

#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace htune::harness {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Specs

struct LogSumExpSpec {
  ParamSchedule a = ParamSchedule::constant(1.0);
  ParamSchedule b = ParamSchedule::constant(1.0);
  ParamSchedule c = ParamSchedule::constant(0.0);
};

struct SwitchingRegressionSpec {
  VectorSchedule data = VectorSchedule::constant(Vector::Ones(1));
  std::optional<Vector> optimum;
};

struct DiagonalQuadraticSpec {
  Vector weights = Vector::Ones(1);
  VectorSchedule center = VectorSchedule::constant(Vector::Zero(1));
};

using ObjectiveSpec = std::variant<LogSumExpSpec, SwitchingRegressionSpec, DiagonalQuadraticSpec>;

enum class OptimizerKind { HT, GD, NAGD, LegacyHT, Adam, Adagrad };

inline const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::HT: return "ht";
    case OptimizerKind::GD: return "gd";
    case OptimizerKind::NAGD: return "nagd";
    case OptimizerKind::LegacyHT: return "legacy_ht";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Adagrad: return "adagrad";
  }
  return "unknown";
}

inline OptimizerKind parse_optimizer_kind(const std::string& s) {
  for (auto k : {OptimizerKind::HT, OptimizerKind::GD, OptimizerKind::NAGD, OptimizerKind::LegacyHT,
                 OptimizerKind::Adam, OptimizerKind::Adagrad}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown optimizer kind '" + s + "'");
}

inline bool uses_normalizer(OptimizerKind k) {
  return k == OptimizerKind::HT || k == OptimizerKind::GD || k == OptimizerKind::NAGD ||
         k == OptimizerKind::LegacyHT;
}

struct OptimizerSpec {
  std::string name;
  OptimizerKind kind = OptimizerKind::GD;
  Vector init;

  /// nullopt: N_t tracks the objective's smoothness bound (the TN- variants).
  std::optional<ParamSchedule> normalizer = ParamSchedule::constant(1.0);

  // HT and legacy HT.
  ParamSchedule gamma = ParamSchedule::constant(1.0);
  ParamSchedule mu = ParamSchedule::constant(1.0);
  /// nullopt: beta_t = 1 - (gamma_t - 1)/gamma_t, i.e. 1/gamma_t.
  std::optional<ParamSchedule> beta = ParamSchedule::constant(1.0);

  // Adam / Adagrad.
  double alpha = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct Monitors {
  bool lyapunov = true;
  bool certificate = true;
  bool regret = false;
};

struct ExperimentConfig {
  ObjectiveSpec objective;
  std::vector<OptimizerSpec> optimizers;
  Step horizon = 1;
  AnalysisParams analysis;
  Monitors monitors;
  std::uint64_t seed = 0;
  std::string output;
};

// ---------------------------------------------------------------------------
// Objective construction

inline std::size_t objective_dim(const ObjectiveSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, LogSumExpSpec>) {
          return 1;
        } else if constexpr (std::is_same_v<S, SwitchingRegressionSpec>) {
          return static_cast<std::size_t>(s.data.segments().front().value.size());
        } else {
          return static_cast<std::size_t>(s.weights.size());
        }
      },
      spec);
}

inline std::shared_ptr<const TimeVaryingObjective> make_objective(const ObjectiveSpec& spec) {
  try {
    return std::visit(
        [](const auto& s) -> std::shared_ptr<const TimeVaryingObjective> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, LogSumExpSpec>) {
            return std::make_shared<LogSumExpObjective>(s.a, s.b, s.c);
          } else if constexpr (std::is_same_v<S, SwitchingRegressionSpec>) {
            return std::make_shared<SwitchingRegression>(s.data, s.optimum);
          } else {
            return std::make_shared<DiagonalQuadratic>(s.weights, s.center);
          }
        },
        spec);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("objective: ") + e.what());
  }
}

/// Beta at step t, resolving the inverse-gamma rule.
inline double beta_at(const OptimizerSpec& o, Step t) {
  if (o.beta) return o.beta->at(t);
  const double g = o.gamma.at(t);
  return 1.0 - (g - 1.0) / g;
}

inline double normalizer_at(const OptimizerSpec& o, const TimeVaryingObjective& obj, Step t) {
  return o.normalizer ? o.normalizer->at(t) : obj.smoothness_bound(t);
}

// ---------------------------------------------------------------------------
// Validation

/// Throws ConfigError naming the first problem found.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (cfg.optimizers.empty()) throw ConfigError("at least one optimizer is required");
  try {
    cfg.analysis.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("analysis: ") + e.what());
  }
  const auto obj = make_objective(cfg.objective);
  const std::size_t dim = obj->dim();

  std::set<std::string> names;
  for (const auto& o : cfg.optimizers) {
    const std::string where = "optimizer '" + o.name + "': ";
    if (o.name.empty()) throw ConfigError("optimizer names must be non-empty");
    if (o.name.find_first_of(",\"\n\r") != std::string::npos) {
      throw ConfigError(where + "name must not contain commas, quotes or newlines");
    }
    if (!names.insert(o.name).second) throw ConfigError("duplicate optimizer name '" + o.name + "'");
    if (static_cast<std::size_t>(o.init.size()) != dim || !o.init.allFinite()) {
      throw ConfigError(where + "init must be a finite vector of dimension " + std::to_string(dim));
    }
    if (uses_normalizer(o.kind) && o.normalizer) {
      for (const auto& seg : o.normalizer->segments()) {
        if (!(seg.value > 0.0) || !std::isfinite(seg.value)) throw ConfigError(where + "normalizer must be positive");
      }
    }
    if (o.kind == OptimizerKind::HT || o.kind == OptimizerKind::LegacyHT) {
      for (Step t = 0; t < cfg.horizon; ++t) {
        const double g = o.gamma.at(t), m = o.mu.at(t), b = beta_at(o, t);
        if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError(where + "gamma must be positive");
        if (!(m > 0.0 && m <= 1.0)) throw ConfigError(where + "mu must lie in (0, 1]");
        if (!(b >= 0.0 && b <= 1.0)) {
          throw ConfigError(where + "beta must lie in [0, 1] (step " + std::to_string(t) + ")");
        }
      }
    }
    if (o.kind == OptimizerKind::Adam || o.kind == OptimizerKind::Adagrad) {
      if (!(o.alpha > 0.0) || !(o.eps > 0.0)) throw ConfigError(where + "alpha and eps must be positive");
      if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0)) {
        throw ConfigError(where + "beta1 and beta2 must lie in [0, 1)");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

inline Vector vector_from(const json& j, const std::string& where) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a number or a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return v;
}

inline Step step_from(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": segment start must be an integer");
  return j.get<Step>();
}

/// A number, or [[start, value], ...].
inline ParamSchedule param_schedule(const json& j, const std::string& where) {
  if (j.is_number()) return ParamSchedule::constant(j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a number or a list of [start, value] pairs");
  std::vector<ParamSchedule::Segment> segs;
  for (const auto& seg : j) {
    if (!seg.is_array() || seg.size() != 2) throw ConfigError(where + ": each segment must be [start, value]");
    segs.push_back({step_from(seg[0], where), number(seg[1], where)});
  }
  try {
    return ParamSchedule(std::move(segs));
  } catch (const InvalidSchedule& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// A vector (or scalar), or [[start, vector], ...].
inline VectorSchedule vector_schedule(const json& j, const std::string& where) {
  const bool pairs = j.is_array() && !j.empty() && j.front().is_array();
  if (!pairs) return VectorSchedule::constant(vector_from(j, where));
  std::vector<VectorSchedule::Segment> segs;
  for (const auto& seg : j) {
    if (!seg.is_array() || seg.size() != 2) throw ConfigError(where + ": each segment must be [start, vector]");
    segs.push_back({step_from(seg[0], where), vector_from(seg[1], where)});
  }
  try {
    return VectorSchedule(std::move(segs));
  } catch (const InvalidSchedule& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline json to_json(const ParamSchedule& s) {
  if (s.segments().size() == 1) return s.segments().front().value;
  json out = json::array();
  for (const auto& seg : s.segments()) out.push_back(json::array({seg.start, seg.value}));
  return out;
}

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json to_json(const VectorSchedule& s) {
  if (s.segments().size() == 1) return to_json(s.segments().front().value);
  json out = json::array();
  for (const auto& seg : s.segments()) out.push_back(json::array({seg.start, to_json(seg.value)}));
  return out;
}

inline ObjectiveSpec objective_from(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("objective must be an object with a string 'kind'");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "logsumexp") {
    reject_unknown_keys(j, {"kind", "a", "b", "c"}, "objective");
    LogSumExpSpec s;
    for (const char* key : {"a", "b", "c"}) {
      if (!j.contains(key)) throw ConfigError(std::string("objective: missing schedule '") + key + "'");
    }
    s.a = param_schedule(j["a"], "objective.a");
    s.b = param_schedule(j["b"], "objective.b");
    s.c = param_schedule(j["c"], "objective.c");
    return s;
  }
  if (kind == "switching_regression") {
    reject_unknown_keys(j, {"kind", "data", "optimum"}, "objective");
    if (!j.contains("data")) throw ConfigError("objective: missing schedule 'data'");
    SwitchingRegressionSpec s;
    s.data = vector_schedule(j["data"], "objective.data");
    if (j.contains("optimum") && !j["optimum"].is_null()) s.optimum = vector_from(j["optimum"], "objective.optimum");
    return s;
  }
  if (kind == "diagonal_quadratic") {
    reject_unknown_keys(j, {"kind", "weights", "center"}, "objective");
    if (!j.contains("weights") || !j.contains("center")) {
      throw ConfigError("objective: diagonal_quadratic needs 'weights' and 'center'");
    }
    DiagonalQuadraticSpec s;
    s.weights = vector_from(j["weights"], "objective.weights");
    s.center = vector_schedule(j["center"], "objective.center");
    return s;
  }
  throw ConfigError("unknown objective kind '" + kind + "'");
}

inline OptimizerSpec optimizer_from(const json& j, std::size_t index) {
  const std::string where = "optimizers[" + std::to_string(index) + "]";
  reject_unknown_keys(j,
                      {"name", "kind", "init", "normalizer", "gamma", "mu", "beta", "alpha", "beta1", "beta2", "eps"},
                      where);
  if (!j.contains("name") || !j["name"].is_string()) throw ConfigError(where + ": missing string 'name'");
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError(where + ": missing string 'kind'");
  if (!j.contains("init")) throw ConfigError(where + ": missing 'init'");

  OptimizerSpec o;
  o.name = j["name"].get<std::string>();
  o.kind = parse_optimizer_kind(j["kind"].get<std::string>());
  o.init = vector_from(j["init"], where + ".init");

  if (uses_normalizer(o.kind)) {
    if (!j.contains("normalizer")) throw ConfigError(where + ": missing 'normalizer'");
    const auto& n = j["normalizer"];
    if (n.is_string()) {
      if (n.get<std::string>() != "smoothness") {
        throw ConfigError(where + ".normalizer: the only named normalizer is \"smoothness\"");
      }
      o.normalizer.reset();
    } else {
      o.normalizer = param_schedule(n, where + ".normalizer");
    }
  }
  if (o.kind == OptimizerKind::HT || o.kind == OptimizerKind::LegacyHT) {
    if (!j.contains("gamma") || !j.contains("beta")) throw ConfigError(where + ": needs 'gamma' and 'beta'");
    o.gamma = param_schedule(j["gamma"], where + ".gamma");
    if (j.contains("mu")) o.mu = param_schedule(j["mu"], where + ".mu");
    const auto& b = j["beta"];
    if (b.is_string()) {
      if (b.get<std::string>() != "inverse_gamma") {
        throw ConfigError(where + ".beta: the only named rule is \"inverse_gamma\"");
      }
      o.beta.reset();
    } else {
      o.beta = param_schedule(b, where + ".beta");
    }
  }
  if (o.kind == OptimizerKind::Adam || o.kind == OptimizerKind::Adagrad) {
    if (j.contains("alpha")) o.alpha = number(j["alpha"], where + ".alpha");
    if (j.contains("eps")) o.eps = number(j["eps"], where + ".eps");
  }
  if (o.kind == OptimizerKind::Adam) {
    if (j.contains("beta1")) o.beta1 = number(j["beta1"], where + ".beta1");
    if (j.contains("beta2")) o.beta2 = number(j["beta2"], where + ".beta2");
  }
  return o;
}

}  // namespace detail

/// Parses and validates a config document.
inline ExperimentConfig config_from_json(const json& j) {
  detail::reject_unknown_keys(
      j, {"schema_version", "objective", "optimizers", "horizon", "analysis", "monitors", "seed", "output"}, "config");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != kSchemaVersion) {
    throw ConfigError("config: schema_version must be " + std::to_string(kSchemaVersion));
  }
  for (const char* key : {"objective", "optimizers", "horizon"}) {
    if (!j.contains(key)) throw ConfigError(std::string("config: missing '") + key + "'");
  }

  ExperimentConfig cfg;
  cfg.objective = detail::objective_from(j["objective"]);
  if (!j["horizon"].is_number_integer()) throw ConfigError("config: horizon must be an integer");
  cfg.horizon = j["horizon"].get<Step>();
  if (!j["optimizers"].is_array()) throw ConfigError("config: optimizers must be an array");
  for (std::size_t i = 0; i < j["optimizers"].size(); ++i) {
    cfg.optimizers.push_back(detail::optimizer_from(j["optimizers"][i], i));
  }
  if (j.contains("analysis")) {
    const auto& a = j["analysis"];
    detail::reject_unknown_keys(a, {"lambda", "xi", "nu", "epsilon"}, "analysis");
    if (a.contains("lambda")) cfg.analysis.lambda = detail::number(a["lambda"], "analysis.lambda");
    if (a.contains("xi")) cfg.analysis.xi = detail::number(a["xi"], "analysis.xi");
    if (a.contains("nu")) cfg.analysis.nu = detail::number(a["nu"], "analysis.nu");
    if (a.contains("epsilon")) cfg.analysis.epsilon = detail::number(a["epsilon"], "analysis.epsilon");
  }
  if (j.contains("monitors")) {
    const auto& m = j["monitors"];
    detail::reject_unknown_keys(m, {"lyapunov", "certificate", "regret"}, "monitors");
    auto flag = [&](const char* key, bool& out) {
      if (!m.contains(key)) return;
      if (!m[key].is_boolean()) throw ConfigError(std::string("monitors.") + key + " must be a boolean");
      out = m[key].get<bool>();
    };
    flag("lyapunov", cfg.monitors.lyapunov);
    flag("certificate", cfg.monitors.certificate);
    flag("regret", cfg.monitors.regret);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
      throw ConfigError("config: seed must be a non-negative integer");
    }
    const auto s = j["seed"].get<std::int64_t>();
    if (s < 0) throw ConfigError("config: seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("config: output must be a string");
    cfg.output = j["output"].get<std::string>();
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig config_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_string(text);
}

inline json to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["horizon"] = cfg.horizon;
  j["seed"] = cfg.seed;
  if (!cfg.output.empty()) j["output"] = cfg.output;
  j["objective"] = std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        json o;
        if constexpr (std::is_same_v<S, LogSumExpSpec>) {
          o = {{"kind", "logsumexp"},
               {"a", detail::to_json(s.a)},
               {"b", detail::to_json(s.b)},
               {"c", detail::to_json(s.c)}};
        } else if constexpr (std::is_same_v<S, SwitchingRegressionSpec>) {
          o = {{"kind", "switching_regression"}, {"data", detail::to_json(s.data)}};
          if (s.optimum) o["optimum"] = detail::to_json(*s.optimum);
        } else {
          o = {{"kind", "diagonal_quadratic"},
               {"weights", detail::to_json(s.weights)},
               {"center", detail::to_json(s.center)}};
        }
        return o;
      },
      cfg.objective);
  j["optimizers"] = json::array();
  for (const auto& o : cfg.optimizers) {
    json e = {{"name", o.name}, {"kind", to_string(o.kind)}, {"init", detail::to_json(o.init)}};
    if (uses_normalizer(o.kind)) {
      e["normalizer"] = o.normalizer ? detail::to_json(*o.normalizer) : json("smoothness");
    }
    if (o.kind == OptimizerKind::HT || o.kind == OptimizerKind::LegacyHT) {
      e["gamma"] = detail::to_json(o.gamma);
      e["mu"] = detail::to_json(o.mu);
      e["beta"] = o.beta ? detail::to_json(*o.beta) : json("inverse_gamma");
    }
    if (o.kind == OptimizerKind::Adam || o.kind == OptimizerKind::Adagrad) {
      e["alpha"] = o.alpha;
      e["eps"] = o.eps;
    }
    if (o.kind == OptimizerKind::Adam) {
      e["beta1"] = o.beta1;
      e["beta2"] = o.beta2;
    }
    j["optimizers"].push_back(std::move(e));
  }
  j["analysis"] = {{"lambda", cfg.analysis.lambda},
                   {"xi", cfg.analysis.xi},
                   {"nu", cfg.analysis.nu},
                   {"epsilon", cfg.analysis.epsilon}};
  j["monitors"] = {
      {"lyapunov", cfg.monitors.lyapunov}, {"certificate", cfg.monitors.certificate}, {"regret", cfg.monitors.regret}};
  return j;
}

}  // namespace htune::harness
