#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>

#include "epa/field.hpp"

namespace epa::testing {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Random trigonometric polynomial with modes 1..modes, scaled so that its
/// sup over the grid is at most amp, plus a constant offset.
inline Field random_smooth(const Grid& grid, std::mt19937_64& rng, std::size_t modes, double amp,
                           double offset = 0.0) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<double> a(modes + 1), b(modes + 1);
  for (std::size_t m = 1; m <= modes; ++m) {
    a[m] = coef(rng) / static_cast<double>(m);
    b[m] = coef(rng) / static_cast<double>(m);
  }
  Field f = Field::from_function(grid, [&](double x) {
    double s = 0.0;
    for (std::size_t m = 1; m <= modes; ++m) {
      s += a[m] * std::cos(kTwoPi * m * x) + b[m] * std::sin(kTwoPi * m * x);
    }
    return s;
  });
  const double sup = max_abs(f);
  if (sup > 0.0) f *= amp / sup;
  f += offset;
  return f;
}

/// Sup-norm distance.
inline double max_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

}  // namespace epa::testing
