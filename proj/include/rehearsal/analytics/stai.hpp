#pragma once

#include <set>
#include <span>

namespace rehearsal::analytics {

/// Item-level scoring key for a questionnaire total. The item key of the
/// real instrument is not built in; callers supply the reversed items.
struct ScoringSpec {
  int item_count = 20;
  int item_min = 1;
  int item_max = 4;
  std::set<int> reversed_items;  // 1-based item numbers

  /// Throws StatError when the spec is inconsistent.
  void check() const;
  int min_total() const { return item_count * item_min; }
  int max_total() const { return item_count * item_max; }
};

/// Sum of item scores, reversed items scored as item_min + item_max - r.
/// Throws StatError on a length or range violation.
int score_stai(std::span<const int> responses, const ScoringSpec& spec);

}  // namespace rehearsal::analytics
