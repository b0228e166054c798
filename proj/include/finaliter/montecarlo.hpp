#pragma once

// Monte Carlo checks of fixed-step SGD on one-dimensional nearly linear functions.
//
// Domain X = [-D/2, D/2], step eta = 4D / (G sqrt T), good set S = {x : f(x) - f* <= GD/sqrt T}.
// Outside S the oracle mean has magnitude in [c eps G, eps G]. Every oracle draw is +-G, so
// the mean pins down the distribution: P[+G] = (1 + m/G) / 2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "finaliter/csv.hpp"
#include "finaliter/errors.hpp"
#include "finaliter/parallel.hpp"
#include "finaliter/random.hpp"
#include "finaliter/sgd.hpp"
#include "finaliter/walk1d.hpp"

namespace finaliter {

enum class NearlyLinearShape { Abs, AsymAbs, Piecewise };

inline std::string_view shape_name(NearlyLinearShape s) {
  switch (s) {
    case NearlyLinearShape::Abs:
      return "abs";
    case NearlyLinearShape::AsymAbs:
      return "asym_abs";
    case NearlyLinearShape::Piecewise:
      return "piecewise";
  }
  return "?";
}

/// Convex piecewise-linear profile: `slopes[l]` holds between knots[l-1] and knots[l].
struct PiecewiseProfile {
  std::vector<double> knots;
  std::vector<double> slopes;
};

struct ShapeSpec {
  NearlyLinearShape kind = NearlyLinearShape::Abs;
  double slope_ratio = 1.0;  // asym_abs: |left slope| / right slope
  PiecewiseProfile profile;  // piecewise only

  static ShapeSpec abs() { return {}; }
  static ShapeSpec asym_abs(double ratio) { return {NearlyLinearShape::AsymAbs, ratio, {}}; }
  static ShapeSpec piecewise(PiecewiseProfile p) { return {NearlyLinearShape::Piecewise, 1.0, std::move(p)}; }
};

class NearlyLinearInstance {
 public:
  double D() const noexcept { return D_; }
  double G() const noexcept { return G_; }
  double epsilon() const noexcept { return epsilon_; }
  double c() const noexcept { return c_; }
  NearlyLinearShape shape() const noexcept { return shape_; }
  double lo() const noexcept { return -0.5 * D_; }
  double hi() const noexcept { return 0.5 * D_; }
  double argmin() const noexcept { return argmin_; }
  double f_star() const noexcept { return 0.0; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& slopes() const noexcept { return slopes_; }

  /// f(x), shifted so that min over X is 0.
  double value(double x) const {
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < slopes_.size(); ++l) v = std::max(v, slopes_[l] * x + intercepts_[l]);
    return v - offset_;
  }

  double right_derivative(double x) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    return slopes_[static_cast<std::size_t>(it - knots_.begin())];
  }
  double left_derivative(double x) const {
    const auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
    return slopes_[static_cast<std::size_t>(it - knots_.begin())];
  }

  /// Conditional mean of the oracle at x: the midpoint of the subdifferential.
  double oracle_mean(double x) const { return 0.5 * (left_derivative(x) + right_derivative(x)); }

  /// Probability of drawing +G at x.
  double plus_probability(double x) const { return 0.5 * (1.0 + oracle_mean(x) / G_); }

  /// One oracle draw at x given a uniform [0, 1) variate.
  double draw(double x, double uniform) const { return uniform < plus_probability(x) ? G_ : -G_; }

 private:
  friend NearlyLinearInstance build_nearly_linear(const ShapeSpec&, double, double, double, double);
  NearlyLinearInstance() = default;

  double D_ = 1.0;
  double G_ = 1.0;
  double epsilon_ = 1.0;
  double c_ = 1.0;
  NearlyLinearShape shape_ = NearlyLinearShape::Abs;
  std::vector<double> knots_;
  std::vector<double> slopes_;
  std::vector<double> intercepts_;
  double offset_ = 0.0;
  double argmin_ = 0.0;
};

inline NearlyLinearInstance build_nearly_linear(const ShapeSpec& shape, double D, double G,
                                                double epsilon, double c) {
  if (!(D > 0.0) || !(G > 0.0)) throw std::invalid_argument("D and G must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1]");
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("c must lie in (0, 1]");

  NearlyLinearInstance inst;
  inst.D_ = D;
  inst.G_ = G;
  inst.epsilon_ = epsilon;
  inst.c_ = c;
  inst.shape_ = shape.kind;
  const double top = epsilon * G;
  switch (shape.kind) {
    case NearlyLinearShape::Abs:
      inst.knots_ = {0.0};
      inst.slopes_ = {-top, top};
      break;
    case NearlyLinearShape::AsymAbs:
      inst.knots_ = {0.0};
      inst.slopes_ = {-shape.slope_ratio * top, top};
      break;
    case NearlyLinearShape::Piecewise:
      inst.knots_ = shape.profile.knots;
      inst.slopes_ = shape.profile.slopes;
      break;
  }

  if (inst.slopes_.size() != inst.knots_.size() + 1) {
    throw std::invalid_argument("piecewise profile needs exactly one more slope than knots");
  }
  for (std::size_t l = 0; l < inst.knots_.size(); ++l) {
    if (!(inst.knots_[l] > inst.lo() && inst.knots_[l] < inst.hi())) {
      throw std::invalid_argument("profile knots must lie strictly inside the domain");
    }
    if (l > 0 && !(inst.knots_[l] > inst.knots_[l - 1])) {
      throw std::invalid_argument("profile knots must be strictly increasing");
    }
  }
  // Slope band: every non-flat piece has |slope| in [c eps G, eps G]. Flat pieces sit at
  // the minimum and are always inside S.
  constexpr double band_slack = 1e-12;
  for (std::size_t l = 0; l < inst.slopes_.size(); ++l) {
    const double s = inst.slopes_[l];
    if (l > 0 && s < inst.slopes_[l - 1]) throw std::invalid_argument("profile slopes must be nondecreasing (convexity)");
    const double mag = std::fabs(s);
    if (mag != 0.0 && (mag < c * top - band_slack || mag > top + band_slack)) {
      throw std::invalid_argument("slope " + format_real(s) + " violates the band [c eps G, eps G] = [" +
                                  format_real(c * top) + ", " + format_real(top) + "]");
    }
  }

  // Continuous intercepts, then shift so the minimum over X is zero.
  inst.intercepts_.assign(inst.slopes_.size(), 0.0);
  for (std::size_t l = 1; l < inst.slopes_.size(); ++l) {
    inst.intercepts_[l] = inst.intercepts_[l - 1] + (inst.slopes_[l - 1] - inst.slopes_[l]) * inst.knots_[l - 1];
  }
  std::vector<double> candidates{inst.lo(), inst.hi()};
  candidates.insert(candidates.end(), inst.knots_.begin(), inst.knots_.end());
  inst.offset_ = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (double x : candidates) {
    const double v = inst.value(x);
    if (v < best || (v == best && x < inst.argmin_)) {
      best = v;
      inst.argmin_ = x;
    }
  }
  inst.offset_ = best;
  return inst;
}

/// Endpoints of S = {x in X : f(x) - f* <= GD / sqrt T}.
struct GoodSet {
  double left = 0.0;
  double right = 0.0;
  double threshold = 0.0;
};

inline double good_set_threshold(const NearlyLinearInstance& inst, std::size_t T) {
  return inst.G() * inst.D() / std::sqrt(static_cast<double>(T));
}

inline bool in_good_set(const NearlyLinearInstance& inst, double x, double threshold) {
  return inst.value(x) - inst.f_star() <= threshold;
}

/// Sublevel sets of a convex function are intervals, so each endpoint is found by bisection
/// between the minimizer and the domain boundary.
inline GoodSet good_set(const NearlyLinearInstance& inst, std::size_t T) {
  if (T < 1) throw std::invalid_argument("T must be positive");
  GoodSet s;
  s.threshold = good_set_threshold(inst, T);
  const auto excess = [&](double x) { return inst.value(x) - inst.f_star() - s.threshold; };
  const auto boundary = [&](double inside, double outside) {
    if (excess(outside) <= 0.0) return outside;
    while (std::fabs(outside - inside) > 1e-12) {
      const double mid = 0.5 * (inside + outside);
      if (excess(mid) <= 0.0) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return inside;
  };
  s.left = boundary(inst.argmin(), inst.lo());
  s.right = boundary(inst.argmin(), inst.hi());
  return s;
}

/// Oracle for one Monte Carlo trial. Step t draws uniform_at(seed, trial, t).
class NearlyLinearOracle {
 public:
  NearlyLinearOracle(const NearlyLinearInstance& inst, std::uint64_t trial) : inst_(&inst), trial_(trial) {}

  std::size_t dim() const noexcept { return 1; }
  void query(std::span<const double> x, std::size_t t, std::uint64_t seed, std::span<double> g) const {
    g[0] = inst_->draw(x[0], uniform_at(seed, trial_, t));
  }
  double value(std::span<const double> x) const { return inst_->value(x[0]); }

 private:
  const NearlyLinearInstance* inst_;
  std::uint64_t trial_;
};

/// Where each trial starts: a fixed point, or uniform on X drawn from uniform_at(seed, trial, 0).
struct StartRule {
  std::optional<double> fixed;

  static StartRule at(double x) { return {x}; }
  static StartRule uniform() { return {}; }

  double resolve(const NearlyLinearInstance& inst, std::uint64_t seed, std::uint64_t trial) const {
    if (fixed) return *fixed;
    return inst.lo() + (inst.hi() - inst.lo()) * uniform_at(seed, trial, 0);
  }
};

inline double fixed_step_size(const NearlyLinearInstance& inst, std::size_t T) {
  return 4.0 * inst.D() / (inst.G() * std::sqrt(static_cast<double>(T)));
}

struct PathStatistics {
  std::size_t T = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double step = 0.0;
  GoodSet good;
  std::vector<double> start_x;
  std::vector<double> final_x;
  std::vector<double> final_suboptimality;
  /// Last i in 0..T with x_i in S, or -1 if the path never entered S.
  std::vector<long long> last_visit;

  std::size_t never_hit_count() const {
    return static_cast<std::size_t>(std::count(last_visit.begin(), last_visit.end(), -1LL));
  }
  double never_hit_fraction() const {
    return static_cast<double>(never_hit_count()) / static_cast<double>(trials);
  }
};

/// Runs `trials` independent T-step SGD paths x_0..x_T with the fixed step 4D/(G sqrt T).
inline PathStatistics simulate_paths(const NearlyLinearInstance& inst, std::size_t T, std::size_t trials,
                                     const StartRule& start, std::uint64_t seed, unsigned jobs = 1) {
  if (T < 1) throw std::invalid_argument("T must be positive");
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (start.fixed && !(*start.fixed >= inst.lo() && *start.fixed <= inst.hi())) {
    throw DomainError("start point outside the domain");
  }

  PathStatistics stats;
  stats.T = T;
  stats.trials = trials;
  stats.seed = seed;
  stats.step = fixed_step_size(inst, T);
  stats.good = good_set(inst, T);
  stats.start_x.resize(trials);
  stats.final_x.resize(trials);
  stats.final_suboptimality.resize(trials);
  stats.last_visit.resize(trials);

  const FeasibleSet set = FeasibleSet::interval(inst.lo(), inst.hi());
  const StepSchedule schedule = StepSchedule::constant(stats.step, T);
  const double threshold = stats.good.threshold;

  parallel_for(trials, jobs, [&](std::size_t trial) {
    NearlyLinearOracle oracle(inst, trial);
    const double x0 = start.resolve(inst, seed, trial);
    const std::vector<double> x1{x0};
    const SgdTrace trace = run_sgd(oracle, set, schedule, x1, T, seed);
    long long last = -1;
    // engine iterate i+1 is x_i
    for (std::size_t i = 0; i <= T; ++i) {
      if (in_good_set(inst, trace.iterate(i + 1)[0], threshold)) last = static_cast<long long>(i);
    }
    stats.start_x[trial] = x0;
    stats.final_x[trial] = trace.final_iterate()[0];
    stats.final_suboptimality[trial] = trace.final_value() - inst.f_star();
    stats.last_visit[trial] = last;
  });
  return stats;
}

struct TailRow {
  std::size_t k = 0;
  std::size_t count = 0;
  double probability = 0.0;
};

struct TailEstimate {
  std::vector<TailRow> rows;            // k = 1..k_max
  std::vector<std::size_t> fitted_k;    // bins used in the regression
  double rate = 0.0;                    // slope of ln Pr[f(x_T) - f* >= k GD/sqrt T] against k
};

inline constexpr std::size_t kTailMaxK = 20;
inline constexpr std::size_t kTailMinCount = 10;

/// Empirical Pr[f(x_T) - f* >= k GD/sqrt T] for k = 1..k_max.
inline std::vector<TailRow> tail_table(const PathStatistics& stats, const NearlyLinearInstance& inst,
                                       std::size_t k_max = kTailMaxK) {
  const double unit = good_set_threshold(inst, stats.T);
  std::vector<TailRow> rows;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double level = static_cast<double>(k) * unit;
    const auto count = static_cast<std::size_t>(std::count_if(
        stats.final_suboptimality.begin(), stats.final_suboptimality.end(), [&](double v) { return v >= level; }));
    rows.push_back({k, count, static_cast<double>(count) / static_cast<double>(stats.trials)});
  }
  return rows;
}

/// Tail table plus the least-squares slope of the log tail over bins with at least
/// `min_count` hits.
inline TailEstimate tail_estimate(const PathStatistics& stats, const NearlyLinearInstance& inst,
                                  std::size_t k_max = kTailMaxK, std::size_t min_count = kTailMinCount) {
  TailEstimate est;
  est.rows = tail_table(stats, inst, k_max);
  for (const auto& row : est.rows) {
    if (row.count >= min_count) est.fitted_k.push_back(row.k);
  }
  if (est.fitted_k.size() < 2) {
    throw InsufficientDataError("tail fit needs at least two bins with " + std::to_string(min_count) +
                                " or more hits; got " + std::to_string(est.fitted_k.size()));
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k : est.fitted_k) {
    const double x = static_cast<double>(k);
    const double y = std::log(est.rows[k - 1].probability);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(est.fitted_k.size());
  est.rate = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return est;
}

struct MeanEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline MeanEstimate mean_and_standard_error(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("no values");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

inline constexpr std::size_t kMinTrialsForMean = 100;

/// Sample mean and standard error of f(x_T) - f*, summed in trial order.
inline MeanEstimate expected_suboptimality(const PathStatistics& stats) {
  if (stats.trials < kMinTrialsForMean) {
    throw InsufficientDataError("expected suboptimality needs at least 100 trials");
  }
  return mean_and_standard_error(stats.final_suboptimality);
}

/// Empirical oracle moments at a fixed point: sample mean, its standard error, max |draw|.
struct OracleSample {
  double mean = 0.0;
  double standard_error = 0.0;
  double max_magnitude = 0.0;
};

inline OracleSample sample_oracle(const NearlyLinearInstance& inst, double x, std::size_t draws,
                                  std::uint64_t seed) {
  std::vector<double> values(draws);
  double max_mag = 0.0;
  for (std::size_t s = 0; s < draws; ++s) {
    values[s] = inst.draw(x, uniform_at(seed, 0, s));
    max_mag = std::max(max_mag, std::fabs(values[s]));
  }
  const auto est = mean_and_standard_error(values);
  return {est.mean, est.standard_error, max_mag};
}

/// The +-1 oracle of a walk chain driven through the SGD engine on [0, 1] with step 1/n.
/// The state index is the nearest grid point to the iterate.
class RestrictedWalkOracle {
 public:
  RestrictedWalkOracle(const WalkChain& chain, const ConvexFunction1D& f, std::uint64_t trial)
      : chain_(&chain), f_(&f), trial_(trial) {}

  std::size_t dim() const noexcept { return 1; }
  void query(std::span<const double> x, std::size_t t, std::uint64_t seed, std::span<double> g) const {
    const auto n = static_cast<double>(chain_->n());
    const auto i = static_cast<std::size_t>(std::clamp(std::lround(x[0] * n), 0L, static_cast<long>(chain_->n())));
    g[0] = uniform_at(seed, trial_, t) < chain_->a(i) ? 1.0 : -1.0;
  }
  double value(std::span<const double> x) const { return f_->value(x[0]); }

 private:
  const WalkChain* chain_;
  const ConvexFunction1D* f_;
  std::uint64_t trial_;
};

/// Long-run mean of f(x_t) over t > burn_in, averaged across independent trials started at
/// grid point `start_index`.
inline MeanEstimate simulate_restricted_walk(const WalkChain& chain, const ConvexFunction1D& f,
                                             std::size_t steps, std::size_t burn_in, std::size_t start_index,
                                             std::size_t trials, std::uint64_t seed, unsigned jobs = 1) {
  if (burn_in >= steps) throw std::invalid_argument("burn-in must be shorter than the run");
  if (start_index > chain.n()) throw std::out_of_range("start index outside the grid");
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  const FeasibleSet set = FeasibleSet::interval(0.0, 1.0);
  const StepSchedule schedule = StepSchedule::constant(1.0 / static_cast<double>(chain.n()), steps);
  std::vector<double> per_trial(trials);
  parallel_for(trials, jobs, [&](std::size_t trial) {
    RestrictedWalkOracle oracle(chain, f, trial);
    const std::vector<double> x1{chain.position(start_index)};
    const SgdTrace trace = run_sgd(oracle, set, schedule, x1, steps, seed);
    double sum = 0.0;
    for (std::size_t t = burn_in + 2; t <= steps + 1; ++t) sum += trace.value(t);
    per_trial[trial] = sum / static_cast<double>(steps - burn_in);
  });
  return mean_and_standard_error(per_trial);
}

/// Columns trial, final_x, final_suboptimality, last_visit_t, hit_S (last_visit_t = -1 if never).
inline void write_paths_csv(std::ostream& out, const PathStatistics& stats) {
  out << "trial,final_x,final_suboptimality,last_visit_t,hit_S\n";
  for (std::size_t i = 0; i < stats.trials; ++i) {
    out << i << ',' << format_real(stats.final_x[i]) << ',' << format_real(stats.final_suboptimality[i]) << ','
        << stats.last_visit[i] << ',' << (stats.last_visit[i] >= 0 ? 1 : 0) << '\n';
  }
}

}  // namespace finaliter
