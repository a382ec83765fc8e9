#pragma once

// Independent reference computations for the statistics tests. None of these
// call into the library: Fisher uses exact integer binomial coefficients and
// the distribution tails use direct numerical integration of the densities.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "rehearsal/analytics/stats.hpp"

namespace oracle {

__extension__ typedef unsigned __int128 u128;

inline u128 binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  u128 c = 1;
  for (std::int64_t i = 1; i <= k; ++i) c = c * static_cast<u128>(n - k + i) / static_cast<u128>(i);
  return c;
}

/// Fisher p by enumerating every table with the table's margins. Weights are
/// exact integers C(row0, x) * C(row1, col0 - x), so "no more likely than
/// observed" is an exact comparison. One-sided follows the direction of the
/// departure from the expectation (p = 1 exactly at the expectation).
inline double fisher(const rehearsal::analytics::Table2x2& t, bool two_sided) {
  const std::int64_t a = t[0][0];
  const std::int64_t row0 = t[0][0] + t[0][1];
  const std::int64_t row1 = t[1][0] + t[1][1];
  const std::int64_t col0 = t[0][0] + t[1][0];
  const std::int64_t n = row0 + row1;
  auto weight = [&](std::int64_t x) { return binomial(row0, x) * binomial(row1, col0 - x); };
  const u128 total = binomial(n, col0);
  const u128 observed = weight(a);
  u128 hits = 0;
  for (std::int64_t x = 0; x <= std::min(row0, col0); ++x) {
    const u128 w = weight(x);
    if (w == 0) continue;
    bool counted = false;
    if (two_sided) {
      counted = w <= observed;
    } else if (a * n == row0 * col0) {
      counted = true;
    } else if (a * n < row0 * col0) {
      counted = x <= a;
    } else {
      counted = x >= a;
    }
    if (counted) hits += w;
  }
  return static_cast<double>(static_cast<long double>(hits) / static_cast<long double>(total));
}

/// Composite Simpson rule on [lo, hi] with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals) {
  const double h = (hi - lo) / intervals;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) sum += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

/// Two-sided Student t tail: 1 - 2 * integral of the density over [0, |t|].
inline double t_two_sided(double t, double df) {
  const double log_norm = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto density = [&](double x) { return std::exp(log_norm - (df + 1) / 2 * std::log1p(x * x / df)); };
  const double inner = simpson(density, 0.0, std::abs(t), 20000);
  return std::max(0.0, 1.0 - 2.0 * inner);
}

/// Regularized incomplete beta by integrating the beta density (a, b >= 1).
inline double beta_cdf(double a, double b, double x) {
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  auto density = [&](double u) {
    if (u <= 0.0 || u >= 1.0) return (u <= 0.0 ? (a == 1.0 ? 1.0 : 0.0) : (b == 1.0 ? 1.0 : 0.0)) * std::exp(log_norm);
    return std::exp(log_norm + (a - 1) * std::log(u) + (b - 1) * std::log1p(-u));
  };
  return simpson(density, 0.0, x, 20000);
}

/// Random 2x2 table with total in [4, max_n] and all margins non-zero.
inline rehearsal::analytics::Table2x2 random_table(std::mt19937_64& rng, int max_n) {
  for (;;) {
    const int n = std::uniform_int_distribution<int>(4, max_n)(rng);
    std::uniform_int_distribution<int> cell(0, 3);
    std::int64_t c[4] = {0, 0, 0, 0};
    for (int i = 0; i < n; ++i) ++c[cell(rng)];
    rehearsal::analytics::Table2x2 t{{{c[0], c[1]}, {c[2], c[3]}}};
    if (c[0] + c[1] > 0 && c[2] + c[3] > 0 && c[0] + c[2] > 0 && c[1] + c[3] > 0) return t;
  }
}

}  // namespace oracle
