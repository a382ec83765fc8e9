#include "rehearsal/analytics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rehearsal/analytics/special.hpp"

namespace rehearsal::analytics {

namespace {

// Relative slack when comparing table probabilities for the two-sided sum,
// so tables that tie with the observed one up to rounding are included.
constexpr double kTieTolerance = 1e-7;

void check_table(const Table2x2& t) {
  for (const auto& row : t) {
    for (auto v : row) {
      if (v < 0) throw StatError("2x2 table cells must be non-negative");
    }
  }
  const auto r0 = t[0][0] + t[0][1];
  const auto r1 = t[1][0] + t[1][1];
  const auto c0 = t[0][0] + t[1][0];
  const auto c1 = t[0][1] + t[1][1];
  if (r0 == 0 || r1 == 0 || c0 == 0 || c1 == 0) throw StatError("2x2 table has a zero margin");
}

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

struct Hypergeometric {
  std::int64_t lo = 0;
  std::vector<double> pmf;  // pmf[i] = P(X = lo + i)

  double at(std::int64_t x) const { return pmf[static_cast<std::size_t>(x - lo)]; }
  std::int64_t hi() const { return lo + static_cast<std::int64_t>(pmf.size()) - 1; }
};

// Distribution of the top-left count given the table margins.
Hypergeometric top_left_distribution(const Table2x2& t) {
  const auto row0 = t[0][0] + t[0][1];
  const auto col0 = t[0][0] + t[1][0];
  const auto n = row0 + t[1][0] + t[1][1];
  Hypergeometric h;
  h.lo = std::max<std::int64_t>(0, row0 + col0 - n);
  const auto hi = std::min(row0, col0);
  std::vector<double> logs;
  for (auto x = h.lo; x <= hi; ++x) logs.push_back(log_choose(col0, x) + log_choose(n - col0, row0 - x));
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double l : logs) {
    h.pmf.push_back(std::exp(l - top));
    total += h.pmf.back();
  }
  for (double& p : h.pmf) p /= total;
  return h;
}

void require_two(std::span<const double> xs, const char* what) {
  if (xs.size() < 2) throw StatError(std::string(what) + " needs at least 2 values");
}

double pooled_variance(std::span<const double> a, std::span<const double> b) {
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  return ((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0);
}

}  // namespace

std::string_view to_string(Sidedness sided) { return sided == Sidedness::kOne ? "one-sided" : "two-sided"; }

double mean(std::span<const double> xs) {
  if (xs.empty()) throw StatError("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  require_two(xs, "variance");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

StatResult unpaired_t_test(std::span<const double> a, std::span<const double> b) {
  require_two(a, "unpaired t test");
  require_two(b, "unpaired t test");
  const double sp2 = pooled_variance(a, b);
  if (!(sp2 > 0.0)) throw StatError("unpaired t test: pooled variance is zero");
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  StatResult r;
  r.statistic = diff / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
  r.df = na + nb - 2.0;
  r.p_value = student_t_two_sided_p(r.statistic, r.df);
  r.effect_size = diff / std::sqrt(sp2);
  return r;
}

StatResult paired_t_test(std::span<const double> pre, std::span<const double> post) {
  if (pre.size() != post.size()) throw StatError("paired t test: samples differ in length");
  require_two(pre, "paired t test");
  std::vector<double> diffs(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) diffs[i] = post[i] - pre[i];
  const double m = mean(diffs);
  const double v = variance(diffs);
  StatResult r;
  r.df = static_cast<double>(diffs.size() - 1);
  if (!(v > 0.0)) {
    if (m == 0.0) return r;  // no change at all: t = 0, p = 1
    throw StatError("paired t test: differences have zero variance");
  }
  r.statistic = m / std::sqrt(v / static_cast<double>(diffs.size()));
  r.p_value = student_t_two_sided_p(r.statistic, r.df);
  r.effect_size = m / std::sqrt(v);
  return r;
}

StatResult fisher_exact_2x2(const Table2x2& table, Sidedness sided) {
  check_table(table);
  const auto h = top_left_distribution(table);
  const auto a = table[0][0];
  const auto row0 = table[0][0] + table[0][1];
  const auto col0 = table[0][0] + table[1][0];
  const auto n = row0 + table[1][0] + table[1][1];

  StatResult r;
  r.statistic = static_cast<double>(a);
  r.df = 0.0;
  double p = 0.0;
  if (sided == Sidedness::kOne) {
    // Compare a with its expectation row0 * col0 / n exactly in integers.
    const auto lhs = a * n;
    const auto rhs = row0 * col0;
    if (lhs == rhs) {
      p = 1.0;
    } else if (lhs < rhs) {
      for (auto x = h.lo; x <= a; ++x) p += h.at(x);
    } else {
      for (auto x = a; x <= h.hi(); ++x) p += h.at(x);
    }
  } else {
    const double observed = h.at(a);
    for (double q : h.pmf) {
      if (q <= observed * (1.0 + kTieTolerance)) p += q;
    }
  }
  r.p_value = std::clamp(p, 0.0, 1.0);
  return r;
}

double chi_square_statistic(const Table2x2& t, bool yates) {
  const double n = static_cast<double>(t[0][0] + t[0][1] + t[1][0] + t[1][1]);
  const double rows[2] = {static_cast<double>(t[0][0] + t[0][1]), static_cast<double>(t[1][0] + t[1][1])};
  const double cols[2] = {static_cast<double>(t[0][0] + t[1][0]), static_cast<double>(t[0][1] + t[1][1])};
  double x2 = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double expected = rows[i] * cols[j] / n;
      double dev = std::abs(static_cast<double>(t[i][j]) - expected);
      if (yates) dev = std::max(0.0, dev - 0.5);
      x2 += dev * dev / expected;
    }
  }
  return x2;
}

StatResult chi_square_2x2(const Table2x2& table, bool yates) {
  for (const auto& row : table) {
    for (auto v : row) {
      if (v < 0) throw StatError("2x2 table cells must be non-negative");
    }
  }
  const auto r0 = table[0][0] + table[0][1];
  const auto r1 = table[1][0] + table[1][1];
  const auto c0 = table[0][0] + table[1][0];
  const auto c1 = table[0][1] + table[1][1];
  if (r0 == 0 || r1 == 0 || c0 == 0 || c1 == 0) throw StatError("chi-square: an expected count is zero");
  StatResult r;
  r.statistic = chi_square_statistic(table, yates);
  r.df = 1.0;
  r.p_value = chi_square_sf(r.statistic, 1.0);
  return r;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  require_two(a, "Cohen's d");
  require_two(b, "Cohen's d");
  const double sp2 = pooled_variance(a, b);
  if (!(sp2 > 0.0)) throw StatError("Cohen's d: pooled variance is zero");
  return (mean(a) - mean(b)) / std::sqrt(sp2);
}

double proportion_below(std::span<const double> scores, double threshold) {
  if (scores.empty()) throw StatError("proportion below threshold of an empty sample");
  const auto below = std::count_if(scores.begin(), scores.end(), [&](double s) { return s < threshold; });
  return static_cast<double>(below) / static_cast<double>(scores.size());
}

}  // namespace rehearsal::analytics
