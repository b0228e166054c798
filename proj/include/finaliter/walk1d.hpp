#pragma once

// Birth-death chain of SGD with a +-1 oracle and step 1/n on the grid {0, 1/n, ..., 1}.
//
// At state i the oracle outputs +1 with probability a_i, moving the point left (or keeping
// it at 0); otherwise it moves right (or stays at 1). Detailed balance gives
//   p_i = p_0 * prod_{j<i} (1 - a_j) / prod_{1<=j<=i} a_j.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "finaliter/csv.hpp"
#include "finaliter/errors.hpp"
#include "finaliter/random.hpp"

namespace finaliter {

/// A convex function on [0, 1] given by its values and right derivatives.
struct ConvexFunction1D {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> right_derivative;
};

namespace profiles {

inline ConvexFunction1D linear(double slope) {
  return {"linear(" + format_real(slope) + ")", [slope](double x) { return slope * x; },
          [slope](double) { return slope; }};
}

inline ConvexFunction1D quadratic() {
  return {"quadratic", [](double x) { return 0.5 * x * x; }, [](double x) { return x; }};
}

inline ConvexFunction1D cubic() {
  return {"cubic", [](double x) { return x * x * x / 3.0; }, [](double x) { return x * x; }};
}

/// x^{3/2} / (3/2), derivative sqrt(x).
inline ConvexFunction1D three_halves() {
  return {"three-halves", [](double x) { return x * std::sqrt(x) / 1.5; },
          [](double x) { return std::sqrt(x); }};
}

/// Quadratic up to `width`, linear with slope 1 afterwards.
inline ConvexFunction1D huber(double width) {
  return {"huber(" + format_real(width) + ")",
          [width](double x) { return x <= width ? 0.5 * x * x / width : x - 0.5 * width; },
          [width](double x) { return x < width ? x / width : 1.0; }};
}

/// max(0.1 x, 0.8 x - 0.35), kink at 1/2.
inline ConvexFunction1D kinked() {
  return {"kinked", [](double x) { return std::max(0.1 * x, 0.8 * x - 0.35); },
          [](double x) { return x < 0.5 ? 0.1 : 0.8; }};
}

/// log(1 + e^x) - log 2, derivative in [1/2, e/(1+e)].
inline ConvexFunction1D softplus() {
  return {"softplus", [](double x) { return std::log1p(std::exp(x)) - std::numbers::ln2; },
          [](double x) { return 1.0 / (1.0 + std::exp(-x)); }};
}

/// Every 1-Lipschitz convex f on [0, 1] with unique minimum f(0) = 0 used in the bound sweeps.
inline std::vector<ConvexFunction1D> corpus() {
  return {linear(1.0), linear(0.5), linear(0.1), linear(0.01), quadratic(), cubic(),
          three_halves(), huber(0.3), kinked(), softplus()};
}

/// Lookup by CLI name: identity, linear, gentle, quadratic, cubic, three-halves, huber,
/// kinked, softplus.
inline ConvexFunction1D by_name(std::string_view name) {
  if (name == "identity") return linear(1.0);
  if (name == "linear") return linear(0.5);
  if (name == "gentle") return linear(0.1);
  if (name == "quadratic") return quadratic();
  if (name == "cubic") return cubic();
  if (name == "three-halves") return three_halves();
  if (name == "huber") return huber(0.3);
  if (name == "kinked") return kinked();
  if (name == "softplus") return softplus();
  throw std::invalid_argument("unknown walk profile '" + std::string(name) + "'");
}

}  // namespace profiles

class WalkChain {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  /// Validates 1/2 <= a_0 <= ... <= a_n <= 1 and builds the transition matrix.
  explicit WalkChain(std::vector<double> left_probability) : a_(std::move(left_probability)) {
    if (a_.size() < 2) throw std::invalid_argument("walk chain needs n >= 1 (at least two states)");
    for (std::size_t i = 0; i < a_.size(); ++i) {
      if (!(a_[i] >= 0.5 && a_[i] <= 1.0)) {
        throw std::invalid_argument("left-move probability a_" + std::to_string(i) + " = " +
                                    format_real(a_[i]) + " outside [1/2, 1]");
      }
      if (i > 0 && a_[i] < a_[i - 1]) {
        throw std::invalid_argument("left-move probabilities are not monotone at i = " +
                                    std::to_string(i));
      }
    }
    build_matrix();
  }

  std::size_t n() const noexcept { return a_.size() - 1; }
  std::size_t states() const noexcept { return a_.size(); }
  double a(std::size_t i) const { return a_.at(i); }
  const std::vector<double>& left_probabilities() const noexcept { return a_; }
  const Matrix& transition() const noexcept { return P_; }

  /// Grid point i/n.
  double position(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(n()); }

 private:
  void build_matrix() {
    const auto last = static_cast<Eigen::Index>(n());
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * a_.size());
    for (Eigen::Index i = 0; i <= last; ++i) {
      const double left = a_[static_cast<std::size_t>(i)];
      entries.emplace_back(i, i == 0 ? 0 : i - 1, left);
      entries.emplace_back(i, i == last ? last : i + 1, 1.0 - left);
    }
    P_.resize(last + 1, last + 1);
    P_.setFromTriplets(entries.begin(), entries.end());  // duplicates are summed
    P_.makeCompressed();
  }

  std::vector<double> a_;
  Matrix P_;
};

/// a_i = (1 + f'_+(i/n)) / 2, so the +-1 oracle has mean equal to the right derivative.
inline WalkChain chain_from_function(const ConvexFunction1D& f, std::size_t n) {
  if (n < 1) throw std::invalid_argument("grid size n must be positive");
  std::vector<double> a(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double slope = f.right_derivative(static_cast<double>(i) / static_cast<double>(n));
    a[i] = 0.5 * (1.0 + slope);
  }
  return WalkChain(std::move(a));
}

enum class StationaryMethod { ClosedForm, LinearSolve, PowerIteration };

inline std::string_view method_name(StationaryMethod m) {
  switch (m) {
    case StationaryMethod::ClosedForm:
      return "closed_form";
    case StationaryMethod::LinearSolve:
      return "linear_solve";
    case StationaryMethod::PowerIteration:
      return "power_iteration";
  }
  return "?";
}

inline StationaryMethod parse_method(std::string_view name) {
  for (auto m : {StationaryMethod::ClosedForm, StationaryMethod::LinearSolve,
                 StationaryMethod::PowerIteration}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown stationary method '" + std::string(name) + "'");
}

struct StationaryResult {
  std::vector<double> p;
  StationaryMethod method = StationaryMethod::ClosedForm;
  double residual = 0.0;  // |pP - p|_inf
  std::size_t iterations = 0;
};

inline double stationary_residual(const WalkChain& chain, std::span<const double> p) {
  if (p.size() != chain.states()) throw DimensionError("distribution length does not match the chain");
  const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
  const Eigen::VectorXd next = chain.transition().transpose() * pv;
  return (next - pv).cwiseAbs().maxCoeff();
}

/// Product formula evaluated in log space. A factor 1 - a_j = 0 zeroes every later state.
inline StationaryResult stationary_closed_form(const WalkChain& chain) {
  const std::size_t states = chain.states();
  std::vector<double> log_p(states, 0.0);
  std::size_t support = states;  // p_i = 0 for i >= support
  for (std::size_t i = 1; i < states; ++i) {
    const double stay_right = 1.0 - chain.a(i - 1);
    if (stay_right == 0.0) {
      support = i;
      break;
    }
    if (!(chain.a(i) > 0.0)) throw DomainError("a_" + std::to_string(i) + " = 0 in the product formula");
    log_p[i] = log_p[i - 1] + std::log(stay_right) - std::log(chain.a(i));
  }
  const double peak = *std::max_element(log_p.begin(), log_p.begin() + static_cast<std::ptrdiff_t>(support));

  StationaryResult result;
  result.method = StationaryMethod::ClosedForm;
  result.p.assign(states, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < support; ++i) {
    result.p[i] = std::exp(log_p[i] - peak);
    total += result.p[i];
  }
  for (auto& v : result.p) v /= total;
  result.residual = stationary_residual(chain, result.p);
  return result;
}

struct PowerIterationOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 1'000'000;
};

namespace detail {

inline StationaryResult stationary_linear_solve(const WalkChain& chain) {
  // (P^T - I) p = 0 with the first balance equation replaced by sum(p) = 1.
  const auto N = static_cast<Eigen::Index>(chain.states());
  const auto& P = chain.transition();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(4 * N));
  for (Eigen::Index i = 0; i < P.outerSize(); ++i) {
    for (WalkChain::Matrix::InnerIterator it(P, i); it; ++it) {
      if (it.col() != 0) entries.emplace_back(it.col(), it.row(), it.value());
    }
    if (i != 0) entries.emplace_back(i, i, -1.0);
    entries.emplace_back(0, i, 1.0);
  }
  Eigen::SparseMatrix<double> A(N, N);
  A.setFromTriplets(entries.begin(), entries.end());
  A.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw NumericalError("sparse LU factorization failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  rhs[0] = 1.0;
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw NumericalError("sparse LU solve failed");

  StationaryResult result;
  result.method = StationaryMethod::LinearSolve;
  result.p.assign(x.data(), x.data() + N);
  double total = 0.0;
  for (auto& v : result.p) {
    if (v < -1e-10) throw NumericalError("linear solve produced a negative probability");
    v = std::max(v, 0.0);
    total += v;
  }
  for (auto& v : result.p) v /= total;
  result.residual = stationary_residual(chain, result.p);
  return result;
}

inline StationaryResult stationary_power_iteration(const WalkChain& chain, const PowerIterationOptions& opts) {
  const auto N = static_cast<Eigen::Index>(chain.states());
  const Eigen::SparseMatrix<double, Eigen::RowMajor> Pt = chain.transition().transpose();
  Eigen::VectorXd p = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
  Eigen::VectorXd next(N);
  double residual = 0.0;
  for (std::size_t iter = 1; iter <= opts.max_iterations; ++iter) {
    next.noalias() = Pt * p;
    residual = (next - p).cwiseAbs().maxCoeff();
    p.swap(next);
    if (residual <= opts.tolerance) {
      StationaryResult result;
      result.method = StationaryMethod::PowerIteration;
      result.p.assign(p.data(), p.data() + N);
      const double total = p.sum();
      for (auto& v : result.p) v /= total;
      result.residual = stationary_residual(chain, result.p);
      result.iterations = iter;
      return result;
    }
  }
  throw ConvergenceError("power iteration did not reach the residual target in " +
                             std::to_string(opts.max_iterations) + " iterations",
                         residual);
}

}  // namespace detail

/// Numerical stationary distribution, independent of the product formula.
inline StationaryResult stationary_solve(const WalkChain& chain, StationaryMethod method,
                                         const PowerIterationOptions& opts = {}) {
  switch (method) {
    case StationaryMethod::LinearSolve:
      return detail::stationary_linear_solve(chain);
    case StationaryMethod::PowerIteration:
      return detail::stationary_power_iteration(chain, opts);
    case StationaryMethod::ClosedForm:
      return stationary_closed_form(chain);
  }
  throw std::logic_error("unhandled stationary method");
}

/// sum_i p_i f(i/n).
inline double stationary_suboptimality(const WalkChain& chain, const StationaryResult& stationary,
                                       const ConvexFunction1D& f) {
  if (stationary.p.size() != chain.states()) throw DimensionError("distribution length does not match the chain");
  double total = 0.0;
  for (std::size_t i = 0; i < chain.states(); ++i) total += stationary.p[i] * f.value(chain.position(i));
  return total;
}

/// (2 + 24e) / sqrt(T) with T = n^2.
inline double stationary_bound(std::size_t n) {
  return (2.0 + 24.0 * std::numbers::e) / static_cast<double>(n);
}

/// Occupation frequencies of a simulated walk after `burn_in` steps. Step s draws
/// uniform_at(seed, 0, s), so the path is reproducible from the seed alone.
inline std::vector<double> simulate_occupation(const WalkChain& chain, std::size_t steps,
                                               std::size_t burn_in, std::size_t start,
                                               std::uint64_t seed) {
  if (start >= chain.states()) throw std::out_of_range("start state outside the grid");
  if (burn_in >= steps) throw std::invalid_argument("burn-in must be shorter than the walk");
  const std::size_t last = chain.n();
  std::vector<double> counts(chain.states(), 0.0);
  std::size_t state = start;
  for (std::size_t s = 0; s < steps; ++s) {
    if (uniform_at(seed, 0, s) < chain.a(state)) {
      state = state == 0 ? 0 : state - 1;
    } else {
      state = state == last ? last : state + 1;
    }
    if (s >= burn_in) counts[state] += 1.0;
  }
  const double kept = static_cast<double>(steps - burn_in);
  for (auto& c : counts) c /= kept;
  return counts;
}

inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("distributions differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return 0.5 * s;
}

/// Columns i, x = i/n, a_i, p_i, f(x).
inline void write_walk_csv(std::ostream& out, const WalkChain& chain, const StationaryResult& stationary,
                           const ConvexFunction1D& f) {
  out << "i,x,a_i,p_i,f(x)\n";
  for (std::size_t i = 0; i < chain.states(); ++i) {
    const double x = chain.position(i);
    out << i << ',' << format_real(x) << ',' << format_real(chain.a(i)) << ','
        << format_real(stationary.p[i]) << ',' << format_real(f.value(x)) << '\n';
  }
}

}  // namespace finaliter
