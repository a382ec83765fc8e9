#include "rehearsal/analytics/permutation.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace rehearsal::analytics {

namespace {

// SplitMix64 finalizer: decorrelates per-block seeds.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Plan {
  std::int64_t n = 0;
  std::int64_t row0 = 0;
  std::int64_t col0 = 0;
  std::int64_t lo = 0;
  std::vector<char> extreme;  // indexed by top-left count - lo
  std::uint64_t blocks = 0;
  std::uint64_t draws = 0;
};

Plan make_plan(const Table2x2& t, std::uint64_t draws, bool yates) {
  for (const auto& row : t) {
    for (auto v : row) {
      if (v < 0) throw StatError("2x2 table cells must be non-negative");
    }
  }
  Plan p;
  p.row0 = t[0][0] + t[0][1];
  p.col0 = t[0][0] + t[1][0];
  p.n = p.row0 + t[1][0] + t[1][1];
  if (p.row0 == 0 || p.row0 == p.n || p.col0 == 0 || p.col0 == p.n) {
    throw StatError("permutation test: table has a zero margin");
  }
  if (draws == 0) throw StatError("permutation test needs at least one draw");
  p.draws = draws;
  p.blocks = (draws + kPermutationBlock - 1) / kPermutationBlock;

  const double observed = chi_square_statistic(t, yates);
  const double slack = 1e-9 * std::max(1.0, observed);
  p.lo = std::max<std::int64_t>(0, p.row0 + p.col0 - p.n);
  const auto hi = std::min(p.row0, p.col0);
  for (auto x = p.lo; x <= hi; ++x) {
    const Table2x2 shuffled{{{x, p.row0 - x}, {p.col0 - x, p.n - p.row0 - p.col0 + x}}};
    p.extreme.push_back(chi_square_statistic(shuffled, yates) >= observed - slack ? 1 : 0);
  }
  return p;
}

// Extreme draws within one block. Each draw deals row0 of the n units to the
// first group without replacement and counts how many carry outcome "yes".
std::uint64_t run_block(const Plan& p, std::uint64_t seed, std::uint64_t block) {
  std::mt19937_64 rng(mix(seed ^ mix(block)));
  const std::uint64_t begin = block * kPermutationBlock;
  const std::uint64_t count = std::min(kPermutationBlock, p.draws - begin);
  std::uint64_t extreme = 0;
  for (std::uint64_t d = 0; d < count; ++d) {
    std::int64_t yes_left = p.col0;
    std::int64_t left = p.n;
    std::int64_t x = 0;
    for (std::int64_t k = 0; k < p.row0; ++k, --left) {
      const auto pick = std::uniform_int_distribution<std::int64_t>(0, left - 1)(rng);
      if (pick < yes_left) {
        ++x;
        --yes_left;
      }
    }
    extreme += static_cast<std::uint64_t>(p.extreme[static_cast<std::size_t>(x - p.lo)]);
  }
  return extreme;
}

PermutationResult finish(const Plan& p, std::uint64_t extreme) {
  return PermutationResult{static_cast<double>(extreme) / static_cast<double>(p.draws), extreme, p.draws};
}

}  // namespace

PermutationResult permutation_chi_square_serial(const Table2x2& table, std::uint64_t draws, std::uint64_t seed,
                                                bool yates) {
  const auto plan = make_plan(table, draws, yates);
  std::uint64_t extreme = 0;
  for (std::uint64_t b = 0; b < plan.blocks; ++b) extreme += run_block(plan, seed, b);
  return finish(plan, extreme);
}

PermutationResult permutation_chi_square_parallel(const Table2x2& table, std::uint64_t draws, std::uint64_t seed,
                                                  bool yates) {
  const auto plan = make_plan(table, draws, yates);
  std::uint64_t extreme = 0;
  const auto blocks = static_cast<std::int64_t>(plan.blocks);
#pragma omp parallel for schedule(static) reduction(+ : extreme)
  for (std::int64_t b = 0; b < blocks; ++b) extreme += run_block(plan, seed, static_cast<std::uint64_t>(b));
  return finish(plan, extreme);
}

}  // namespace rehearsal::analytics
