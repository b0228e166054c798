#pragma once

// Projected (stochastic) subgradient descent with final-iterate output.
//
//   for t = 1..T:  g_t = oracle(x_t, t);  x_{t+1} = Proj_X(x_t - eta_t * g_t)
//
// Steps are 1-based. The trace keeps x_1..x_{T+1}, g_1..g_T and f(x_1)..f(x_{T+1}).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "finaliter/csv.hpp"
#include "finaliter/errors.hpp"
#include "finaliter/vector_ops.hpp"

namespace finaliter {

enum class ScheduleKind { InverseT, InverseSqrtTDecreasing, InverseSqrtTFixed, Constant };

class StepSchedule {
 public:
  StepSchedule() = default;

  /// eta_t = 1/t
  static StepSchedule inverse_t(std::size_t horizon) {
    return StepSchedule(ScheduleKind::InverseT, horizon, 0.0);
  }
  /// eta_t = 1/sqrt(t)
  static StepSchedule inverse_sqrt_t(std::size_t horizon) {
    return StepSchedule(ScheduleKind::InverseSqrtTDecreasing, horizon, 0.0);
  }
  /// eta_t = 1/sqrt(T) for every t
  static StepSchedule fixed_inverse_sqrt(std::size_t horizon) {
    return StepSchedule(ScheduleKind::InverseSqrtTFixed, horizon, 0.0);
  }
  static StepSchedule constant(double value, std::size_t horizon) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw std::invalid_argument("constant step size must be positive and finite");
    }
    return StepSchedule(ScheduleKind::Constant, horizon, value);
  }

  ScheduleKind kind() const noexcept { return kind_; }
  std::size_t horizon() const noexcept { return horizon_; }

  double operator()(std::size_t t) const {
    if (t < 1 || t > horizon_) {
      throw std::out_of_range("step index " + std::to_string(t) + " outside 1.." +
                              std::to_string(horizon_));
    }
    switch (kind_) {
      case ScheduleKind::InverseT:
        return 1.0 / static_cast<double>(t);
      case ScheduleKind::InverseSqrtTDecreasing:
        return 1.0 / std::sqrt(static_cast<double>(t));
      case ScheduleKind::InverseSqrtTFixed:
        return 1.0 / std::sqrt(static_cast<double>(horizon_));
      case ScheduleKind::Constant:
        return value_;
    }
    return 0.0;  // unreachable
  }

  std::string describe() const {
    switch (kind_) {
      case ScheduleKind::InverseT:
        return "1/t";
      case ScheduleKind::InverseSqrtTDecreasing:
        return "1/sqrt(t)";
      case ScheduleKind::InverseSqrtTFixed:
        return "1/sqrt(T)";
      case ScheduleKind::Constant:
        return "constant(" + format_real(value_) + ")";
    }
    return {};
  }

 private:
  StepSchedule(ScheduleKind kind, std::size_t horizon, double value)
      : kind_(kind), horizon_(horizon), value_(value) {
    if (horizon_ < 1) throw std::invalid_argument("schedule horizon must be positive");
  }

  ScheduleKind kind_ = ScheduleKind::InverseT;
  std::size_t horizon_ = 1;
  double value_ = 0.0;
};

struct EuclideanBall {
  double radius = 1.0;
  std::size_t dim = 1;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

class FeasibleSet {
 public:
  static FeasibleSet ball(double radius, std::size_t dim) {
    if (!(radius > 0.0) || dim < 1) throw std::invalid_argument("ball needs radius > 0, dim >= 1");
    return FeasibleSet(EuclideanBall{radius, dim});
  }
  static FeasibleSet interval(double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("interval needs lo <= hi");
    return FeasibleSet(Interval{lo, hi});
  }

  std::size_t dim() const {
    if (const auto* b = std::get_if<EuclideanBall>(&shape_)) return b->dim;
    return 1;
  }

  const std::variant<EuclideanBall, Interval>& shape() const noexcept { return shape_; }

  /// Euclidean projection, written into `out` (may alias `x`). Returns true if the point moved.
  bool project(std::span<const double> x, std::span<double> out) const {
    if (x.size() != dim() || out.size() != dim()) throw DimensionError("projection dimension mismatch");
    if (const auto* b = std::get_if<EuclideanBall>(&shape_)) {
      const double n = norm2(x);
      if (n <= b->radius) {
        if (out.data() != x.data()) std::copy(x.begin(), x.end(), out.begin());
        return false;
      }
      const double scale = b->radius / n;
      for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] * scale;
      return true;
    }
    const auto& iv = std::get<Interval>(shape_);
    const double v = x[0];
    const double c = v < iv.lo ? iv.lo : (v > iv.hi ? iv.hi : v);
    out[0] = c;
    return c != v;
  }

  std::vector<double> project(std::span<const double> x) const {
    std::vector<double> out(x.size());
    project(x, out);
    return out;
  }

  /// Membership with an absolute slack on the defining constraint.
  bool contains(std::span<const double> x, double slack = 0.0) const {
    if (x.size() != dim()) return false;
    if (const auto* b = std::get_if<EuclideanBall>(&shape_)) return norm2(x) <= b->radius + slack;
    const auto& iv = std::get<Interval>(shape_);
    return x[0] >= iv.lo - slack && x[0] <= iv.hi + slack;
  }

 private:
  explicit FeasibleSet(std::variant<EuclideanBall, Interval> shape) : shape_(shape) {}
  std::variant<EuclideanBall, Interval> shape_;
};

/// A subgradient oracle queried once per step with the current iterate and the 1-based step
/// index. `seed` is the run seed; deterministic oracles ignore it.
template <class O>
concept SubgradientOracle = requires(O& oracle, const O& c_oracle, std::span<const double> x,
                                     std::size_t t, std::uint64_t seed, std::span<double> g) {
  { c_oracle.dim() } -> std::convertible_to<std::size_t>;
  oracle.query(x, t, seed, g);
  { c_oracle.value(x) } -> std::convertible_to<double>;
};

struct SgdTrace {
  std::size_t dim = 0;
  StepSchedule schedule;
  std::vector<double> iterates;   // row t-1 holds x_t, t = 1..T+1
  std::vector<double> gradients;  // row t-1 holds g_t, t = 1..T
  std::vector<double> values;     // f(x_t), t = 1..T+1
  std::vector<std::size_t> projected_steps;  // steps t where Proj_X moved y_{t+1}

  std::size_t steps() const noexcept { return values.empty() ? 0 : values.size() - 1; }

  std::span<const double> iterate(std::size_t t) const { return row(iterates, t); }
  std::span<double> iterate(std::size_t t) { return row(iterates, t); }
  std::span<const double> gradient(std::size_t t) const { return row(gradients, t); }
  double value(std::size_t t) const { return values.at(t - 1); }
  std::span<const double> final_iterate() const { return iterate(steps() + 1); }
  double final_value() const { return values.back(); }

 private:
  std::span<const double> row(const std::vector<double>& storage, std::size_t t) const {
    if (t < 1 || t * dim > storage.size()) throw std::out_of_range("trace row out of range");
    return {storage.data() + (t - 1) * dim, dim};
  }
  std::span<double> row(std::vector<double>& storage, std::size_t t) {
    if (t < 1 || t * dim > storage.size()) throw std::out_of_range("trace row out of range");
    return {storage.data() + (t - 1) * dim, dim};
  }
};

template <SubgradientOracle Oracle>
SgdTrace run_sgd(Oracle& oracle, const FeasibleSet& set, const StepSchedule& schedule,
                 std::span<const double> x1, std::size_t steps, std::uint64_t seed = 0) {
  const std::size_t d = set.dim();
  if (oracle.dim() != d) throw DimensionError("oracle dimension does not match the feasible set");
  if (x1.size() != d) throw DimensionError("initial point dimension does not match the feasible set");
  if (steps < 1) throw std::invalid_argument("need at least one step");
  if (!set.contains(x1)) throw DomainError("initial point lies outside the feasible set");

  SgdTrace trace;
  trace.dim = d;
  trace.schedule = schedule;
  trace.iterates.resize((steps + 1) * d);
  trace.gradients.resize(steps * d);
  trace.values.resize(steps + 1);
  std::copy(x1.begin(), x1.end(), trace.iterates.begin());
  trace.values[0] = oracle.value(x1);

  for (std::size_t t = 1; t <= steps; ++t) {
    std::span<const double> x(trace.iterates.data() + (t - 1) * d, d);
    std::span<double> g(trace.gradients.data() + (t - 1) * d, d);
    oracle.query(x, t, seed, g);
    for (double v : g) {
      if (!std::isfinite(v)) throw NumericalError("oracle returned a non-finite subgradient at step " + std::to_string(t));
    }
    const double eta = schedule(t);
    std::span<double> next(trace.iterates.data() + t * d, d);
    for (std::size_t j = 0; j < d; ++j) next[j] = x[j] - eta * g[j];
    if (set.project(next, next)) trace.projected_steps.push_back(t);
    trace.values[t] = oracle.value(next);
  }
  return trace;
}

template <SubgradientOracle Oracle>
SgdTrace run_sgd(Oracle& oracle, const FeasibleSet& set, const StepSchedule& schedule,
                 const std::vector<double>& x1, std::size_t steps, std::uint64_t seed = 0) {
  return run_sgd(oracle, set, schedule, std::span<const double>(x1), steps, seed);
}

/// Mean of x_1..x_{T+1}.
inline std::vector<double> running_average(const SgdTrace& trace) {
  if (trace.values.empty()) throw std::invalid_argument("empty trace");
  std::vector<double> mean(trace.dim, 0.0);
  const std::size_t count = trace.steps() + 1;
  for (std::size_t t = 1; t <= count; ++t) {
    const auto x = trace.iterate(t);
    for (std::size_t j = 0; j < trace.dim; ++j) mean[j] += x[j];
  }
  for (auto& v : mean) v /= static_cast<double>(count);
  return mean;
}

/// CSV with header `t,x_1..x_d,g_1..g_d,f_value`. Row t = T+1 carries x_{T+1} and f(x_{T+1})
/// with empty gradient cells, since no query happens there.
inline void write_trace_csv(std::ostream& out, const SgdTrace& trace) {
  out << "t";
  for (std::size_t j = 1; j <= trace.dim; ++j) out << ",x_" << j;
  for (std::size_t j = 1; j <= trace.dim; ++j) out << ",g_" << j;
  out << ",f_value\n";
  const std::size_t steps = trace.steps();
  for (std::size_t t = 1; t <= steps + 1; ++t) {
    out << t;
    for (double v : trace.iterate(t)) out << ',' << format_real(v);
    if (t <= steps) {
      for (double v : trace.gradient(t)) out << ',' << format_real(v);
    } else {
      for (std::size_t j = 0; j < trace.dim; ++j) out << ',';
    }
    out << ',' << format_real(trace.value(t)) << '\n';
  }
}

}  // namespace finaliter
