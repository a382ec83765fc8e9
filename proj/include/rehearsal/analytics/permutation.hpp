#pragma once

#include <cstdint>

#include "rehearsal/analytics/stats.hpp"

// Monte Carlo permutation test for a 2x2 table: group labels are reshuffled
// with the margins held fixed, and the p-value is the share of shuffles
// whose chi-square statistic is at least the observed one.
//
// Draws are split into fixed-size blocks, each with its own generator seeded
// from (seed, block index), so the OpenMP kernel and the serial reference
// produce bit-identical counts regardless of thread count or schedule.

namespace rehearsal::analytics {

struct PermutationResult {
  double p_value = 1.0;
  std::uint64_t extreme = 0;  // draws with statistic >= observed
  std::uint64_t draws = 0;
};

inline constexpr std::uint64_t kPermutationBlock = 4096;

/// Serial reference implementation.
PermutationResult permutation_chi_square_serial(const Table2x2& table, std::uint64_t draws, std::uint64_t seed,
                                                bool yates = false);

/// OpenMP implementation; equals the serial result exactly.
PermutationResult permutation_chi_square_parallel(const Table2x2& table, std::uint64_t draws, std::uint64_t seed,
                                                  bool yates = false);

}  // namespace rehearsal::analytics
