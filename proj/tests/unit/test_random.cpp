#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "finaliter/random.hpp"
#include "finaliter/vector_ops.hpp"

using namespace finaliter;

// Known-answer vectors from the Random123 distribution (kat_vectors, philox4x32_10).
TEST_CASE("philox4x32-10 matches the reference known-answer vectors", "[random]") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("philox is usable at compile time", "[random]") {
  static_assert(philox4x32({0, 0, 0, 0}, {0, 0})[0] == 0x6627e8d5u);
  static_assert(to_unit_interval(0) == 0.0);
  static_assert(to_unit_interval(~0ULL) < 1.0);
}

TEST_CASE("uniform_at is a pure function of (seed, stream, position)", "[random]") {
  CHECK(uniform_at(7, 3, 11) == uniform_at(7, 3, 11));
  CHECK(uniform_at(7, 3, 11) != uniform_at(7, 3, 12));
  CHECK(uniform_at(7, 3, 11) != uniform_at(7, 4, 11));
  CHECK(uniform_at(7, 3, 11) != uniform_at(8, 3, 11));
}

TEST_CASE("uniform variates look uniform", "[random][property]") {
  constexpr int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  int bins[10] = {};
  for (int i = 0; i < n; ++i) {
    const double u = uniform_at(42, 0, static_cast<std::uint64_t>(i));
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum_sq += u * u;
    ++bins[static_cast<int>(u * 10)];
  }
  CHECK(sum / n == Catch::Approx(0.5).margin(0.005));
  CHECK(sum_sq / n - (sum / n) * (sum / n) == Catch::Approx(1.0 / 12.0).margin(0.002));
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - n / 10.0) * (b - n / 10.0) / (n / 10.0);
  CHECK(chi2 < 27.88);  // 99.9% quantile, 9 degrees of freedom
}

TEST_CASE("CounterRng streams are reproducible and distinct", "[random]") {
  CounterRng a(5, 1), b(5, 1), c(5, 2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
}

TEST_CASE("normal variates have unit variance", "[random][property]") {
  CounterRng rng(9);
  constexpr int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  CHECK(sum / n == Catch::Approx(0.0).margin(0.02));
  CHECK(sum_sq / n == Catch::Approx(1.0).margin(0.02));
}

TEST_CASE("sample_ball stays in the ball and fills it radially", "[random][property]") {
  CounterRng rng(3);
  for (std::size_t dim : {1u, 2u, 5u, 64u}) {
    // for the uniform law on the ball, |x|^d is uniform on [0, 1]
    double mean_pow = 0.0;
    constexpr int n = 20000;
    for (int i = 0; i < n; ++i) {
      const auto x = sample_ball(rng, dim, 2.0);
      REQUIRE(x.size() == dim);
      const double r = norm2(x);
      REQUIRE(r <= 2.0);
      mean_pow += std::pow(r / 2.0, static_cast<double>(dim));
    }
    CHECK(mean_pow / n == Catch::Approx(0.5).margin(0.01));
  }
}
