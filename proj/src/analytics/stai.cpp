#include "rehearsal/analytics/stai.hpp"

#include <string>

#include "rehearsal/analytics/stats.hpp"

namespace rehearsal::analytics {

void ScoringSpec::check() const {
  if (item_count < 1) throw StatError("scoring spec needs at least one item");
  if (item_min >= item_max) throw StatError("scoring spec needs item_min < item_max");
  for (int item : reversed_items) {
    if (item < 1 || item > item_count) {
      throw StatError("reversed item " + std::to_string(item) + " is outside 1.." + std::to_string(item_count));
    }
  }
}

int score_stai(std::span<const int> responses, const ScoringSpec& spec) {
  spec.check();
  if (static_cast<int>(responses.size()) != spec.item_count) {
    throw StatError("expected " + std::to_string(spec.item_count) + " responses, got " +
                    std::to_string(responses.size()));
  }
  int total = 0;
  for (int i = 0; i < spec.item_count; ++i) {
    const int r = responses[static_cast<std::size_t>(i)];
    if (r < spec.item_min || r > spec.item_max) {
      throw StatError("response " + std::to_string(r) + " for item " + std::to_string(i + 1) + " is outside " +
                      std::to_string(spec.item_min) + ".." + std::to_string(spec.item_max));
    }
    total += spec.reversed_items.count(i + 1) != 0 ? spec.item_min + spec.item_max - r : r;
  }
  return total;
}

}  // namespace rehearsal::analytics
