#pragma once

#include <cassert>
#include <cmath>
#include <span>

namespace finaliter {

inline double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * y[j];
  return s;
}

inline double norm2_squared(std::span<const double> x) { return dot(x, x); }

inline double norm2(std::span<const double> x) { return std::sqrt(norm2_squared(x)); }

inline double distance2(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double diff = x[j] - y[j];
    s += diff * diff;
  }
  return std::sqrt(s);
}

inline double max_abs_difference(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double m = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) m = std::fmax(m, std::fabs(x[j] - y[j]));
  return m;
}

}  // namespace finaliter
