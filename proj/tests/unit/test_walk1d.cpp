#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include "finaliter/errors.hpp"
#include "finaliter/random.hpp"
#include "finaliter/vector_ops.hpp"
#include "finaliter/walk1d.hpp"

using namespace finaliter;
using Catch::Approx;
using V = std::vector<double>;

namespace {

V random_profile(CounterRng& rng, std::size_t n) {
  V a(n + 1);
  for (auto& v : a) v = 0.5 + 0.5 * rng.uniform();
  std::sort(a.begin(), a.end());
  return a;
}

double sum(const V& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("chain construction and transition pattern", "[walk1d]") {
  const WalkChain chain(V{0.6, 0.7, 0.9});
  const auto& P = chain.transition();
  CHECK(P.coeff(0, 0) == 0.6);
  CHECK(P.coeff(0, 1) == Approx(0.4));
  CHECK(P.coeff(1, 0) == 0.7);
  CHECK(P.coeff(1, 2) == Approx(0.3));
  CHECK(P.coeff(1, 1) == 0.0);
  CHECK(P.coeff(2, 1) == 0.9);
  CHECK(P.coeff(2, 2) == Approx(0.1));
  for (int i = 0; i < 3; ++i) CHECK(std::fabs(P.row(i).sum() - 1.0) <= 1e-15);

  CHECK_THROWS_AS(WalkChain(V{0.4, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(WalkChain(V{0.8, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(WalkChain(V{0.5, 1.01}), std::invalid_argument);
  CHECK_THROWS_AS(WalkChain(V{0.5}), std::invalid_argument);
}

TEST_CASE("chain_from_function examples", "[walk1d]") {
  const auto half = chain_from_function(profiles::linear(0.5), 10);
  for (double a : half.left_probabilities()) CHECK(a == 0.75);
  const auto id = chain_from_function(profiles::linear(1.0), 10);
  for (double a : id.left_probabilities()) CHECK(a == 1.0);
  const auto quad = chain_from_function(profiles::quadratic(), 4);
  for (std::size_t i = 0; i <= 4; ++i) CHECK(quad.a(i) == Approx(0.5 * (1.0 + i / 4.0)));
  // right derivative at the kink
  CHECK(chain_from_function(profiles::kinked(), 2).a(1) == Approx(0.9));

  const ConvexFunction1D steep{"steep", [](double x) { return 2 * x; }, [](double) { return 2.0; }};
  CHECK_THROWS_AS(chain_from_function(steep, 5), std::invalid_argument);
}

TEST_CASE("corpus functions are 1-Lipschitz, convex and minimized at 0", "[walk1d][property]") {
  for (const auto& f : profiles::corpus()) {
    INFO(f.name);
    CHECK(f.value(0.0) == Approx(0.0).margin(1e-15));
    double prev = -1.0;
    for (int k = 0; k <= 1000; ++k) {
      const double x = k / 1000.0;
      const double g = f.right_derivative(x);
      REQUIRE(g >= 0.0);
      REQUIRE(g <= 1.0);
      REQUIRE(g >= prev);
      prev = g;
      REQUIRE(f.value(x) >= 0.0);
    }
  }
}

TEST_CASE("closed form examples", "[walk1d]") {
  const auto uniform = stationary_closed_form(WalkChain(V(6, 0.5)));
  for (double p : uniform.p) CHECK(p == Approx(1.0 / 6.0));

  const auto absorbing = stationary_closed_form(WalkChain(V(5, 1.0)));
  CHECK(absorbing.p == V{1.0, 0.0, 0.0, 0.0, 0.0});

  const auto three = stationary_closed_form(WalkChain(V{0.75, 0.75, 0.75}));
  CHECK(three.p[0] == Approx(9.0 / 13.0));
  CHECK(three.p[1] == Approx(3.0 / 13.0));
  CHECK(three.p[2] == Approx(1.0 / 13.0));
  CHECK(three.residual <= 1e-15);
}

TEST_CASE("all three methods agree on the examples", "[walk1d]") {
  for (const V& a : {V(6, 0.5), V(5, 1.0), V{0.75, 0.75, 0.75}, V{0.5, 0.6, 1.0, 1.0}}) {
    const WalkChain chain(a);
    const auto closed = stationary_closed_form(chain);
    for (auto m : {StationaryMethod::LinearSolve, StationaryMethod::PowerIteration}) {
      const auto r = stationary_solve(chain, m);
      CHECK(r.method == m);
      CHECK(max_abs_difference(r.p, closed.p) <= 1e-10);
      CHECK(r.residual <= 1e-10);
    }
  }
}

TEST_CASE("closed form and linear solve agree on random monotone profiles", "[walk1d][property]") {
  CounterRng rng(2024);
  for (std::size_t n : {10u, 100u, 1000u}) {
    for (int trial = 0; trial < 20; ++trial) {
      const WalkChain chain(random_profile(rng, n));
      const auto closed = stationary_closed_form(chain);
      const auto solved = stationary_solve(chain, StationaryMethod::LinearSolve);
      REQUIRE(max_abs_difference(closed.p, solved.p) <= 1e-10);
      REQUIRE(closed.residual <= 1e-12);
      REQUIRE(sum(closed.p) == Approx(1.0).epsilon(1e-14));
      REQUIRE(*std::min_element(closed.p.begin(), closed.p.end()) >= 0.0);
    }
  }
}

TEST_CASE("power iteration converges on small chains", "[walk1d][property]") {
  CounterRng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const WalkChain chain(random_profile(rng, 12));
    const auto r = stationary_solve(chain, StationaryMethod::PowerIteration);
    CHECK(r.residual <= 1e-12);
    CHECK(r.iterations > 0);
    CHECK(max_abs_difference(r.p, stationary_closed_form(chain).p) <= 1e-10);
  }
}

TEST_CASE("power iteration reports non-convergence", "[walk1d]") {
  // the uniform start is already stationary for a = 1/2, so use a skewed chain
  const WalkChain chain(V(50, 0.75));
  PowerIterationOptions opts;
  opts.max_iterations = 3;
  CHECK_THROWS_AS(stationary_solve(chain, StationaryMethod::PowerIteration, opts), ConvergenceError);
}

TEST_CASE("log-space closed form survives long chains near 1", "[walk1d]") {
  V a(10001);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 + 0.4999 * static_cast<double>(i) / 10000.0;
  const auto r = stationary_closed_form(WalkChain(a));
  CHECK(sum(r.p) == Approx(1.0));
  CHECK(r.residual <= 1e-12);
  for (double p : r.p) REQUIRE(std::isfinite(p));
}

TEST_CASE("mass decays when a is increasing", "[walk1d][property]") {
  CounterRng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_profile(rng, 40);
    for (std::size_t i = 1; i < a.size(); ++i) a[i] = std::max(a[i], std::nextafter(a[i - 1], 2.0));
    if (a.back() > 1.0) continue;
    const auto p = stationary_closed_form(WalkChain(a)).p;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) REQUIRE(p[i + 1] <= p[i] * (1.0 + 1e-12));
  }
}

TEST_CASE("suboptimality examples", "[walk1d]") {
  const auto id = chain_from_function(profiles::linear(1.0), 100);
  CHECK(stationary_suboptimality(id, stationary_closed_form(id), profiles::linear(1.0)) == 0.0);

  // a = 3/4 everywhere: p_i proportional to r^i with r = 1/3
  const auto f = profiles::linear(0.5);
  const auto chain = chain_from_function(f, 100);
  double num = 0.0, den = 0.0;
  for (int i = 0; i <= 100; ++i) {
    num += i * std::pow(1.0 / 3.0, i);
    den += std::pow(1.0 / 3.0, i);
  }
  const double expected = 0.5 * num / den / 100.0;
  CHECK(stationary_suboptimality(chain, stationary_closed_form(chain), f) == Approx(expected).epsilon(1e-12));
  CHECK(expected == Approx(0.0025).epsilon(1e-12));
  CHECK(stationary_bound(100) == Approx((2.0 + 24.0 * std::numbers::e) / 100.0));
}

TEST_CASE("simulated occupation matches the stationary distribution", "[walk1d][property]") {
  for (const char* name : {"quadratic", "linear", "huber"}) {
    const auto f = profiles::by_name(name);
    const std::size_t n = 20;
    const auto chain = chain_from_function(f, n);
    const auto p = stationary_closed_form(chain).p;
    const auto occupation = simulate_occupation(chain, 50 * n * n * 20, n * n, 0, 1);
    INFO(name);
    CHECK(total_variation(occupation, p) <= 0.01);
  }
}

TEST_CASE("walk CSV", "[walk1d]") {
  const WalkChain chain(V{0.75, 0.75, 0.75});
  std::ostringstream out;
  write_walk_csv(out, chain, stationary_closed_form(chain), profiles::linear(0.5));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "i,x,a_i,p_i,f(x)");
  std::getline(in, line);
  CHECK(line.rfind("0,0,0.75,0.6923076923076", 0) == 0);
}

TEST_CASE("method names round-trip", "[walk1d]") {
  for (auto m : {StationaryMethod::ClosedForm, StationaryMethod::LinearSolve, StationaryMethod::PowerIteration}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK_THROWS(parse_method("svd"));
  CHECK_THROWS_AS(profiles::by_name("nope"), std::invalid_argument);
}
