#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace htune {

using Vector = Eigen::VectorXd;

/// Discrete time index. Step 0 is the first step of every run.
using Step = std::int64_t;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidHyperParameter : public Error {
 public:
  using Error::Error;
};

class InvalidSchedule : public Error {
 public:
  using Error::Error;
};

class InvalidObjective : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EstimationFailure : public Error {
 public:
  using Error::Error;
};

class UnsupportedMetric : public Error {
 public:
  using Error::Error;
};

/// Raised when an optimizer state leaves the finite region or exceeds the
/// magnitude guard. Carries the offending vector so callers can record it.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Step t, Vector state)
      : Error(what), t_(t), state_(std::move(state)) {}

  Step step() const noexcept { return t_; }
  const Vector& state() const noexcept { return state_; }

 private:
  Step t_;
  Vector state_;
};

inline void require_dim(const Vector& v, std::size_t dim, const char* what) {
  if (static_cast<std::size_t>(v.size()) != dim) {
    throw ShapeError(std::string(what) + ": expected dimension " + std::to_string(dim) + ", got " +
                     std::to_string(v.size()));
  }
}

inline void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

// ---------------------------------------------------------------------------
// Piecewise-constant schedules

/// Piecewise-constant function of the step index. Segments are left-closed:
/// the value at step t is the value of the last segment whose start <= t.
template <class T>
class Schedule {
 public:
  struct Segment {
    Step start;
    T value;
  };

  explicit Schedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw InvalidSchedule("schedule needs at least one segment");
    if (segments_.front().start != 0) throw InvalidSchedule("first schedule segment must start at step 0");
    for (std::size_t i = 1; i < segments_.size(); ++i) {
      if (segments_[i].start <= segments_[i - 1].start) {
        throw InvalidSchedule("schedule segment starts must be strictly increasing");
      }
    }
  }

  static Schedule constant(T value) { return Schedule({Segment{0, std::move(value)}}); }

  const T& at(Step t) const {
    if (t < 0) throw InvalidSchedule("schedule queried at negative step " + std::to_string(t));
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](Step s, const Segment& seg) { return s < seg.start; });
    return std::prev(it)->value;
  }

  std::span<const Segment> segments() const noexcept { return segments_; }

  /// Steps (> 0) at which the value may change.
  std::vector<Step> change_points() const {
    std::vector<Step> out;
    for (std::size_t i = 1; i < segments_.size(); ++i) out.push_back(segments_[i].start);
    return out;
  }

 private:
  std::vector<Segment> segments_;
};

using ParamSchedule = Schedule<double>;
using VectorSchedule = Schedule<Vector>;

inline double schedule_at(const ParamSchedule& schedule, Step t) { return schedule.at(t); }

/// Sorted union of the change points of several schedules.
template <class... Schedules>
std::vector<Step> merged_change_points(const Schedules&... schedules) {
  std::vector<Step> out;
  (
      [&] {
        auto cp = schedules.change_points();
        out.insert(out.end(), cp.begin(), cp.end());
      }(),
      ...);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Hyper-parameters

struct LearningRates {
  double alpha;  // step for the y update, mu / N
  double eta;    // step for the z update, gamma / N
};

/// Free design parameters of one HT step. The normalizer is the runtime
/// smoothness bound N_t >= L_t.
struct HtHyperParams {
  double gamma = 1.0;
  double mu = 1.0;
  double beta = 1.0;
  double normalizer = 1.0;

  double alpha() const { return mu / normalizer; }
  double eta() const { return gamma / normalizer; }
  double beta_bar() const { return 1.0 - beta; }
  double mu_bar() const { return 1.0 - mu; }

  void validate() const {
    if (!(normalizer > 0.0) || !std::isfinite(normalizer)) {
      throw InvalidHyperParameter("normalizer must be positive and finite");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidHyperParameter("gamma must be positive");
    if (!(mu > 0.0 && mu <= 1.0)) throw InvalidHyperParameter("mu must lie in (0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidHyperParameter("beta must lie in [0, 1]");
  }
};

inline LearningRates derived_rates(const HtHyperParams& h) {
  if (!(h.normalizer > 0.0)) throw InvalidHyperParameter("normalizer must be positive");
  return {h.alpha(), h.eta()};
}

/// Parameters that only appear in the stability analysis.
struct AnalysisParams {
  double lambda = 0.0;
  double xi = 1.0;
  double nu = 0.5;
  double epsilon = 1e-6;

  // lambda = 1 is admitted: it certifies boundedness only (no convergence).
  void validate() const {
    if (!(epsilon > 0.0)) throw InvalidHyperParameter("epsilon must be strictly positive");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidHyperParameter("lambda must lie in [0, 1]");
    if (!(xi >= epsilon) || !std::isfinite(xi)) throw InvalidHyperParameter("xi must be >= epsilon");
    if (!(nu >= epsilon && nu <= 1.0 - epsilon)) {
      throw InvalidHyperParameter("nu must lie in [epsilon, 1 - epsilon]");
    }
  }
};

}  // namespace htune
