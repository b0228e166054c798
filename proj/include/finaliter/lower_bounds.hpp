#pragma once

// Adversarial instances on which the final SGD iterate is provably bad.
//
// Each instance is f(x) = max_{0<=i<=d+1} H_i(x) on the unit ball of R^d with
//   H_i(x) = h_i^T x (+ |x|^2 / 2 for the strongly convex family),
//   h_0 = 0,  h_{i,j} = a_j (j < i),  h_{i,i} = -1 or -b_i,  h_{i,j} = 0 (j > i),
// and h_{d+1} = (a_1, ..., a_d). The oracle returns zero for the first T* = T - d steps and
// afterwards the gradient of the lowest-indexed active non-trivial piece. Starting from the
// origin, the iterates then follow a known closed form z_t, and f(z_{T+1}) grows like log d.

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
#include "finaliter/random.hpp"
#include "finaliter/sgd.hpp"
#include "finaliter/vector_ops.hpp"

namespace finaliter {

/// Absolute tolerance for deciding that a piece attains the max.
inline constexpr double kActiveTolerance = 1e-10;
/// Slack allowed on the unit-ball precondition of eval_f and friends.
inline constexpr double kBallSlack = 1e-12;
/// Slack in the certificate inequalities.
inline constexpr double kCertificateSlack = 1e-12;

enum class Family { StronglyConvexInverseT, LipschitzDecreasing, LipschitzFixed };

inline constexpr Family kAllFamilies[] = {Family::StronglyConvexInverseT,
                                          Family::LipschitzDecreasing, Family::LipschitzFixed};

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::StronglyConvexInverseT:
      return "sc";
    case Family::LipschitzDecreasing:
      return "lip-dec";
    case Family::LipschitzFixed:
      return "lip-fixed";
  }
  return "?";
}

inline Family parse_family(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  throw std::invalid_argument("unknown family '" + std::string(name) +
                              "' (expected sc, lip-dec or lip-fixed)");
}

inline bool is_strongly_convex(Family f) { return f == Family::StronglyConvexInverseT; }

/// Lipschitz constant the construction is normalized to.
inline double family_lipschitz_constant(Family f) { return is_strongly_convex(f) ? 3.0 : 1.0; }

inline StepSchedule family_schedule(Family f, std::size_t horizon) {
  switch (f) {
    case Family::StronglyConvexInverseT:
      return StepSchedule::inverse_t(horizon);
    case Family::LipschitzDecreasing:
      return StepSchedule::inverse_sqrt_t(horizon);
    case Family::LipschitzFixed:
      return StepSchedule::fixed_inverse_sqrt(horizon);
  }
  throw std::logic_error("unhandled family");
}

class AdversarialInstance {
 public:
  Family family() const noexcept { return family_; }
  std::size_t dim() const noexcept { return d_; }
  std::size_t horizon() const noexcept { return T_; }
  /// T* = T - d, the number of leading zero-gradient steps.
  std::size_t kick_start() const noexcept { return T_ - d_; }
  bool has_quadratic_term() const noexcept { return is_strongly_convex(family_); }
  /// Number of pieces H_0..H_{d+1}.
  std::size_t piece_count() const noexcept { return d_ + 2; }

  /// a_j for j = 1..d.
  double a(std::size_t j) const { return a_.at(j - 1); }
  /// b_j for j = 1..d; Lipschitz families only.
  double b(std::size_t j) const {
    if (b_.empty()) throw std::logic_error("the strongly convex family has no b coefficients");
    return b_.at(j - 1);
  }
  const std::vector<double>& a_table() const noexcept { return a_; }
  const std::vector<double>& b_table() const noexcept { return b_; }

  /// h_i for i = 0..d+1.
  std::span<const double> h(std::size_t i) const {
    if (i > d_ + 1) throw std::out_of_range("piece index out of range");
    return {h_.data() + i * d_, d_};
  }

  /// H_i(x).
  double piece(std::size_t i, std::span<const double> x) const {
    double v = dot(h(i), x);
    if (has_quadratic_term()) v += 0.5 * norm2_squared(x);
    return v;
  }

  StepSchedule schedule() const { return family_schedule(family_, T_); }
  FeasibleSet feasible_set() const { return FeasibleSet::ball(1.0, d_); }

 private:
  friend AdversarialInstance build_instance(Family, std::size_t, std::size_t);
  AdversarialInstance(Family family, std::size_t d, std::size_t T) : family_(family), d_(d), T_(T) {}

  Family family_;
  std::size_t d_;
  std::size_t T_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> h_;  // (d+2) x d, row i holds h_i
};

inline AdversarialInstance build_instance(Family family, std::size_t d, std::size_t T) {
  if (d < 1) throw std::invalid_argument("dimension d must be at least 1");
  if (d > T) throw std::invalid_argument("dimension d must not exceed the horizon T");

  AdversarialInstance inst(family, d, T);
  const double dd = static_cast<double>(d);
  const double a_scale = is_strongly_convex(family) ? 2.0 : 8.0;
  inst.a_.resize(d);
  for (std::size_t j = 1; j <= d; ++j) inst.a_[j - 1] = 1.0 / (a_scale * (dd + 1.0 - static_cast<double>(j)));

  if (family == Family::LipschitzDecreasing) {
    const double two_sqrt_T = 2.0 * std::sqrt(static_cast<double>(T));
    inst.b_.resize(d);
    for (std::size_t j = 1; j <= d; ++j) {
      inst.b_[j - 1] = std::sqrt(static_cast<double>(j + T - d)) / two_sqrt_T;
    }
  } else if (family == Family::LipschitzFixed) {
    inst.b_.assign(d, 0.5);
  }

  inst.h_.assign((d + 2) * d, 0.0);
  for (std::size_t i = 1; i <= d + 1; ++i) {
    double* row = inst.h_.data() + i * d;
    for (std::size_t j = 1; j <= d; ++j) {
      if (j < i) {
        row[j - 1] = inst.a_[j - 1];
      } else if (j == i) {
        row[j - 1] = inst.b_.empty() ? -1.0 : -inst.b_[j - 1];
      }
    }
  }
  return inst;
}

namespace detail {

inline void require_in_ball(const AdversarialInstance& inst, std::span<const double> x) {
  if (x.size() != inst.dim()) throw DimensionError("point dimension does not match the instance");
  if (!(norm2(x) <= 1.0 + kBallSlack)) throw DomainError("point lies outside the unit ball");
}

inline std::vector<double> piece_values(const AdversarialInstance& inst, std::span<const double> x) {
  std::vector<double> values(inst.piece_count());
  const double quad = inst.has_quadratic_term() ? 0.5 * norm2_squared(x) : 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = dot(inst.h(i), x) + quad;
  return values;
}

}  // namespace detail

/// f(x) = max_i H_i(x) on the unit ball.
inline double eval_f(const AdversarialInstance& inst, std::span<const double> x) {
  detail::require_in_ball(inst, x);
  const auto values = detail::piece_values(inst, x);
  return *std::max_element(values.begin(), values.end());
}

/// Indices i (ascending) with H_i(x) >= f(x) - tolerance.
struct ActiveSet {
  std::vector<std::size_t> indices;

  bool contains(std::size_t i) const {
    return std::binary_search(indices.begin(), indices.end(), i);
  }
  /// Smallest active index other than 0, if any.
  std::optional<std::size_t> min_nontrivial() const {
    for (std::size_t i : indices) {
      if (i != 0) return i;
    }
    return std::nullopt;
  }
};

inline ActiveSet active_set(const AdversarialInstance& inst, std::span<const double> x,
                            double tolerance = kActiveTolerance) {
  detail::require_in_ball(inst, x);
  const auto values = detail::piece_values(inst, x);
  const double f = *std::max_element(values.begin(), values.end());
  ActiveSet set;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= f - tolerance) set.indices.push_back(i);
  }
  return set;
}

/// Gradient of piece i at x: h_i (+ x for the strongly convex family).
inline std::vector<double> piece_gradient(const AdversarialInstance& inst, std::size_t i,
                                          std::span<const double> x) {
  const auto h = inst.h(i);
  std::vector<double> g(h.begin(), h.end());
  if (inst.has_quadratic_term()) {
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += x[j];
  }
  return g;
}

/// Subgradient with the oracle's selection rule, falling back to piece 0 when it is the only
/// active piece. Used by the certificate checkers at arbitrary points of the ball.
inline std::vector<double> subgradient_at(const AdversarialInstance& inst, std::span<const double> x) {
  const auto selected = active_set(inst, x).min_nontrivial();
  return piece_gradient(inst, selected.value_or(0), x);
}

/// The adversarial oracle: zero for t <= T*, then the gradient of piece min(I(x) \ {0}).
inline std::vector<double> oracle_subgradient(const AdversarialInstance& inst,
                                              std::span<const double> x, std::size_t t) {
  if (t < 1 || t > inst.horizon()) throw std::out_of_range("step index outside 1..T");
  detail::require_in_ball(inst, x);
  if (t <= inst.kick_start()) return std::vector<double>(inst.dim(), 0.0);
  const auto selected = active_set(inst, x).min_nontrivial();
  if (!selected) {
    throw OffTrajectoryError("only H_0 is active at step " + std::to_string(t) +
                             "; the iterate left the region the construction covers");
  }
  return piece_gradient(inst, *selected, x);
}

/// The oracle above packaged for run_sgd. It also compares each selected piece with the
/// analytic prediction t - T* and keeps the steps where they differ.
class AdversarialOracle {
 public:
  explicit AdversarialOracle(const AdversarialInstance& inst) : inst_(&inst) {}

  std::size_t dim() const noexcept { return inst_->dim(); }

  void query(std::span<const double> x, std::size_t t, std::uint64_t /*seed*/, std::span<double> g) {
    const auto out = oracle_subgradient(*inst_, x, t);
    std::copy(out.begin(), out.end(), g.begin());
    if (t > inst_->kick_start()) {
      const std::size_t predicted = t - inst_->kick_start();
      const std::size_t selected = *active_set(*inst_, x).min_nontrivial();
      if (selected != predicted) divergent_steps_.push_back(t);
    }
  }

  double value(std::span<const double> x) const { return eval_f(*inst_, x); }

  /// Steps where the selected piece was not t - T*.
  const std::vector<std::size_t>& divergent_steps() const noexcept { return divergent_steps_; }

 private:
  const AdversarialInstance* inst_;
  std::vector<std::size_t> divergent_steps_;
};

/// Runs projected SGD on the instance from the origin with the family's step schedule.
inline SgdTrace run_adversarial(const AdversarialInstance& inst, AdversarialOracle& oracle) {
  const std::vector<double> origin(inst.dim(), 0.0);
  return run_sgd(oracle, inst.feasible_set(), inst.schedule(), origin, inst.horizon());
}

inline SgdTrace run_adversarial(const AdversarialInstance& inst) {
  AdversarialOracle oracle(inst);
  return run_adversarial(inst, oracle);
}

/// z_t for t = 1..T+1.
inline std::vector<double> closed_form_iterate(const AdversarialInstance& inst, std::size_t t) {
  const std::size_t T = inst.horizon();
  if (t < 1 || t > T + 1) throw std::out_of_range("iterate index outside 1..T+1");
  const std::size_t tstar = inst.kick_start();
  std::vector<double> z(inst.dim(), 0.0);
  if (t <= tstar + 1) return z;

  const double sqrt_T = std::sqrt(static_cast<double>(T));
  // coordinate j is non-zero iff j < t - T*
  for (std::size_t j = 1; j < t - tstar; ++j) {
    const double a = inst.a(j);
    switch (inst.family()) {
      case Family::StronglyConvexInverseT: {
        const double lag = static_cast<double>(t - tstar - j - 1);
        z[j - 1] = (1.0 - lag * a) / static_cast<double>(t - 1);
        break;
      }
      case Family::LipschitzDecreasing: {
        double tail = 0.0;
        for (std::size_t k = j + tstar + 1; k <= t - 1; ++k) tail += 1.0 / std::sqrt(static_cast<double>(k));
        z[j - 1] = inst.b(j) / std::sqrt(static_cast<double>(j + tstar)) - a * tail;
        break;
      }
      case Family::LipschitzFixed: {
        const double lag = static_cast<double>(t - j - tstar - 1);
        z[j - 1] = inst.b(j) / sqrt_T - a * lag / sqrt_T;
        break;
      }
    }
  }
  return z;
}

/// Guaranteed lower bound on f(x_{T+1}) - min f (natural log). For d = 1 the log d form is
/// vacuous, so the per-term constant is returned instead: 1/(4T) or 1/(32 sqrt T).
inline double lower_bound_value(Family family, std::size_t d, std::size_t T) {
  if (d < 1 || d > T) throw std::invalid_argument("lower bound needs 1 <= d <= T");
  const double Td = static_cast<double>(T);
  if (is_strongly_convex(family)) {
    return d == 1 ? 1.0 / (4.0 * Td) : std::log(static_cast<double>(d)) / (5.0 * Td);
  }
  const double denom = 32.0 * std::sqrt(Td);
  return d == 1 ? 1.0 / denom : std::log(static_cast<double>(d)) / denom;
}

struct TrajectoryReport {
  double max_deviation = 0.0;
  std::optional<std::size_t> first_mismatch;
  double final_value = 0.0;
  bool pass = false;
};

/// Compares x_t with z_t in the max norm for t = 1..T+1.
inline TrajectoryReport verify_trajectory(const AdversarialInstance& inst, const SgdTrace& trace,
                                          double tol) {
  if (trace.dim != inst.dim() || trace.steps() != inst.horizon() ||
      trace.iterates.size() != (inst.horizon() + 1) * inst.dim()) {
    throw DimensionError("trace length or dimension does not match the instance");
  }
  TrajectoryReport report;
  for (std::size_t t = 1; t <= inst.horizon() + 1; ++t) {
    const auto z = closed_form_iterate(inst, t);
    const double dev = max_abs_difference(trace.iterate(t), z);
    if (!(dev <= tol) && !report.first_mismatch) report.first_mismatch = t;
    report.max_deviation = std::fmax(report.max_deviation, std::isnan(dev) ? std::numeric_limits<double>::infinity() : dev);
  }
  report.final_value = trace.final_value();
  report.pass = !report.first_mismatch.has_value();
  return report;
}

struct CertificateReport {
  bool pass = true;
  /// Lipschitz: largest |f(x)-f(y)| / |x-y|. Strong convexity: smallest slack.
  double worst = 0.0;
  /// Largest subgradient norm seen (Lipschitz check only).
  double max_gradient_norm = 0.0;
  std::vector<double> witness_x;
  std::vector<double> witness_y;
};

/// Samples pairs in the unit ball and checks |f(x)-f(y)| <= L|x-y| and |g| <= L for the
/// oracle-style subgradient at every sampled point.
inline CertificateReport check_lipschitz(const AdversarialInstance& inst, double L,
                                         std::size_t samples = 10000, std::uint64_t seed = 0) {
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  CounterRng rng(seed);
  CertificateReport report;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const auto x = sample_ball(rng, inst.dim());
    const auto y = sample_ball(rng, inst.dim());
    const double df = std::fabs(eval_f(inst, x) - eval_f(inst, y));
    const double dist = distance2(x, y);
    if (dist > 0.0) report.worst = std::fmax(report.worst, df / dist);
    const double excess = df - L * dist;
    for (const auto* p : {&x, &y}) {
      const double gn = norm2(subgradient_at(inst, *p));
      report.max_gradient_norm = std::fmax(report.max_gradient_norm, gn);
      if (gn > L + kCertificateSlack) report.pass = false;
    }
    if (excess > kCertificateSlack) report.pass = false;
    if (excess > worst_excess) {
      worst_excess = excess;
      report.witness_x = x;
      report.witness_y = y;
    }
  }
  return report;
}

/// f(y) - f(x) - g^T (y - x) - alpha/2 |y - x|^2 with g the oracle-style subgradient at x.
inline double strong_convexity_slack(const AdversarialInstance& inst, std::span<const double> x,
                                     std::span<const double> y, double alpha) {
  const auto g = subgradient_at(inst, x);
  double lin = 0.0;
  double dist2 = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    lin += g[j] * (y[j] - x[j]);
    dist2 += (y[j] - x[j]) * (y[j] - x[j]);
  }
  return eval_f(inst, y) - eval_f(inst, x) - lin - 0.5 * alpha * dist2;
}

inline CertificateReport check_strong_convexity(const AdversarialInstance& inst, double alpha,
                                                std::size_t samples = 10000, std::uint64_t seed = 0) {
  if (!inst.has_quadratic_term()) {
    throw std::invalid_argument("strong convexity is only defined for the strongly convex family");
  }
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  CounterRng rng(seed);
  CertificateReport report;
  report.worst = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const auto x = sample_ball(rng, inst.dim());
    const auto y = sample_ball(rng, inst.dim());
    const double slack = strong_convexity_slack(inst, x, y, alpha);
    if (slack < report.worst) {
      report.worst = slack;
      report.witness_x = x;
      report.witness_y = y;
    }
  }
  report.pass = report.worst >= -kCertificateSlack;
  return report;
}

/// `# family=`, `# d=`, `# T=` metadata lines, then `i,j,h_value` for i = 0..d+1, j = 1..d.
inline void write_instance_csv(std::ostream& out, const AdversarialInstance& inst) {
  out << "# family=" << family_name(inst.family()) << '\n'
      << "# d=" << inst.dim() << '\n'
      << "# T=" << inst.horizon() << '\n'
      << "i,j,h_value\n";
  for (std::size_t i = 0; i < inst.piece_count(); ++i) {
    const auto h = inst.h(i);
    for (std::size_t j = 1; j <= inst.dim(); ++j) out << i << ',' << j << ',' << format_real(h[j - 1]) << '\n';
  }
}

}  // namespace finaliter
