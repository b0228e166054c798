#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "finaliter/errors.hpp"
#include "finaliter/random.hpp"
#include "finaliter/sgd.hpp"
#include "finaliter/vector_ops.hpp"

using namespace finaliter;

namespace {

// f(x) = 0.5 |x - c|^2 with exact gradient; the optional noise makes it stochastic.
struct QuadraticOracle {
  std::vector<double> center;
  double noise = 0.0;
  std::size_t dim() const { return center.size(); }
  void query(std::span<const double> x, std::size_t t, std::uint64_t seed, std::span<double> g) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      g[j] = x[j] - center[j] + noise * (uniform_at(seed, j, t) - 0.5);
    }
  }
  double value(std::span<const double> x) const { return 0.5 * distance2(x, center) * distance2(x, center); }
};

struct NanOracle {
  std::size_t dim() const { return 1; }
  void query(std::span<const double>, std::size_t t, std::uint64_t, std::span<double> g) const {
    g[0] = t == 3 ? std::nan("") : 1.0;
  }
  double value(std::span<const double>) const { return 0.0; }
};

}  // namespace

TEST_CASE("step schedules", "[sgd]") {
  CHECK(StepSchedule::inverse_t(10)(4) == 0.25);
  CHECK(StepSchedule::inverse_sqrt_t(10)(4) == 0.5);
  CHECK(StepSchedule::fixed_inverse_sqrt(16)(1) == 0.25);
  CHECK(StepSchedule::fixed_inverse_sqrt(16)(16) == 0.25);
  CHECK(StepSchedule::constant(0.3, 5)(5) == 0.3);
  CHECK_THROWS_AS(StepSchedule::inverse_t(10)(0), std::out_of_range);
  CHECK_THROWS_AS(StepSchedule::inverse_t(10)(11), std::out_of_range);
}

TEST_CASE("ball projection examples", "[sgd]") {
  const auto ball = FeasibleSet::ball(1.0, 2);
  const auto p = ball.project(std::vector<double>{3.0, 4.0});
  CHECK(p[0] == Catch::Approx(0.6));
  CHECK(p[1] == Catch::Approx(0.8));
  const std::vector<double> inside{0.1, -0.2};
  CHECK(ball.project(inside) == inside);
  const auto box = FeasibleSet::interval(-0.5, 0.5);
  CHECK(box.project(std::vector<double>{0.7})[0] == 0.5);
  CHECK(box.project(std::vector<double>{-3.0})[0] == -0.5);
}

TEST_CASE("projection is the nearest point of the set", "[sgd][property]") {
  CounterRng rng(17);
  for (std::size_t dim : {1u, 3u, 10u}) {
    const auto ball = FeasibleSet::ball(1.5, dim);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> x(dim);
      for (auto& v : x) v = 4.0 * rng.normal();
      const auto px = ball.project(x);
      REQUIRE(ball.contains(px, 1e-12));
      const auto y = sample_ball(rng, dim, 1.5);
      REQUIRE(distance2(x, px) <= distance2(x, y) + 1e-12);
      // idempotence
      REQUIRE(max_abs_difference(ball.project(px), px) <= 1e-15);
    }
  }
  const auto box = FeasibleSet::interval(-1.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<double> x{6.0 * rng.uniform() - 2.5};
    const auto px = box.project(x);
    const std::vector<double> y{-1.0 + 3.0 * rng.uniform()};
    REQUIRE(std::fabs(x[0] - px[0]) <= std::fabs(x[0] - y[0]));
  }
}

TEST_CASE("projection may alias its output", "[sgd]") {
  const auto ball = FeasibleSet::ball(1.0, 2);
  std::vector<double> x{0.0, 2.0};
  CHECK(ball.project(x, x));
  CHECK(x[1] == 1.0);
  CHECK_FALSE(ball.project(x, x));
}

TEST_CASE("run_sgd takes the projected step", "[sgd]") {
  QuadraticOracle oracle{{2.0, 0.0}};
  const auto set = FeasibleSet::ball(1.0, 2);
  const auto trace = run_sgd(oracle, set, StepSchedule::constant(0.5, 3), std::vector<double>{0.0, 0.0}, 3);
  REQUIRE(trace.steps() == 3);
  // x2 = 0 - 0.5 (0 - 2) = (1, 0) on the boundary, then stays there
  CHECK(trace.iterate(2)[0] == 1.0);
  CHECK(trace.iterate(4)[0] == 1.0);
  CHECK(trace.gradient(1)[0] == -2.0);
  CHECK(trace.projected_steps == std::vector<std::size_t>{2, 3});
  CHECK(trace.final_value() == trace.value(4));
}

TEST_CASE("run_sgd rejects bad inputs", "[sgd]") {
  QuadraticOracle oracle{{0.0, 0.0}};
  const auto set = FeasibleSet::ball(1.0, 2);
  const auto sched = StepSchedule::inverse_t(5);
  CHECK_THROWS_AS(run_sgd(oracle, set, sched, std::vector<double>{0.0}, 5), DimensionError);
  CHECK_THROWS_AS(run_sgd(oracle, set, sched, std::vector<double>{2.0, 0.0}, 5), DomainError);
  CHECK_THROWS_AS(run_sgd(oracle, FeasibleSet::ball(1.0, 3), sched, std::vector<double>{0.0, 0.0, 0.0}, 5),
                  DimensionError);
  NanOracle bad;
  CHECK_THROWS_AS(run_sgd(bad, FeasibleSet::interval(-10, 10), sched, std::vector<double>{0.0}, 5), NumericalError);
}

TEST_CASE("iterates stay feasible and runs are deterministic", "[sgd][property]") {
  QuadraticOracle oracle{{3.0, -1.0, 0.5}, 2.0};
  const auto set = FeasibleSet::ball(1.0, 3);
  const auto sched = StepSchedule::inverse_sqrt_t(200);
  const std::vector<double> x1{0.0, 0.0, 0.0};
  const auto a = run_sgd(oracle, set, sched, x1, 200, 99);
  const auto b = run_sgd(oracle, set, sched, x1, 200, 99);
  const auto c = run_sgd(oracle, set, sched, x1, 200, 100);
  CHECK(a.iterates == b.iterates);
  CHECK(a.iterates != c.iterates);
  for (std::size_t t = 1; t <= 201; ++t) REQUIRE(set.contains(a.iterate(t), 1e-12));
}

TEST_CASE("running average and trace CSV", "[sgd]") {
  QuadraticOracle oracle{{1.0}};
  const auto trace =
      run_sgd(oracle, FeasibleSet::interval(-1.0, 1.0), StepSchedule::constant(0.5, 2), std::vector<double>{0.0}, 2);
  // x = 0, 0.5, 0.75
  CHECK(running_average(trace)[0] == Catch::Approx(1.25 / 3.0));
  std::ostringstream out;
  write_trace_csv(out, trace);
  CHECK(out.str() ==
        "t,x_1,g_1,f_value\n"
        "1,0,-1,0.5\n"
        "2,0.5,-0.5,0.125\n"
        "3,0.75,,0.03125\n");
}
