#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>

namespace rehearsal::analytics {

/// Precondition failures of the statistical routines (degenerate variance,
/// zero margins, bad lengths). Distinct from IO errors.
class StatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StatResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  std::optional<double> effect_size;
};

/// Rows are groups, columns are outcome yes/no: {{a, b}, {c, d}}.
using Table2x2 = std::array<std::array<std::int64_t, 2>, 2>;

enum class Sidedness { kOne, kTwo };
std::string_view to_string(Sidedness sided);

double mean(std::span<const double> xs);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> xs);

/// Pooled-variance two-sample t test, two-sided. Effect size is Cohen's d.
/// Errors: fewer than 2 values in either sample, zero pooled variance.
StatResult unpaired_t_test(std::span<const double> a, std::span<const double> b);

/// t test on post - pre differences, df = n - 1, two-sided. When every
/// difference is zero the result is t = 0, p = 1. Errors: length mismatch,
/// n < 2, constant non-zero differences.
StatResult paired_t_test(std::span<const double> pre, std::span<const double> post);

/// Fisher's exact test on a 2x2 table.
///
/// One-sided: the hypergeometric tail in the direction the observed top-left
/// count departs from its expectation under the margins; p = 1 when it sits
/// exactly on the expectation. Two-sided: sum of the probabilities of all
/// tables with the same margins that are no more likely than the observed.
/// Statistic is the top-left count; df is 0. Errors: negative cells or a
/// zero margin.
StatResult fisher_exact_2x2(const Table2x2& table, Sidedness sided = Sidedness::kOne);

/// Pearson chi-square with df = 1, optionally with Yates' continuity
/// correction. Errors: negative cells or any zero expected count.
StatResult chi_square_2x2(const Table2x2& table, bool yates = false);

/// Pearson chi-square statistic alone (shared with the permutation kernel).
double chi_square_statistic(const Table2x2& table, bool yates);

/// (mean_a - mean_b) / pooled sd. Errors as for unpaired_t_test.
double cohens_d(std::span<const double> a, std::span<const double> b);

/// Fraction of scores strictly below the threshold. Errors: empty input.
double proportion_below(std::span<const double> scores, double threshold);

}  // namespace rehearsal::analytics
