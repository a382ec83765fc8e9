#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rehearsal/analytics/stai.hpp"
#include "rehearsal/analytics/stats.hpp"

namespace rehearsal::analytics {

enum class Arm { kMr, kControl };
std::string_view to_string(Arm arm);
std::optional<Arm> arm_from_string(std::string_view name);

struct ParticipantRow {
  std::string id;
  Arm arm = Arm::kMr;
  double stai_baseline = 0.0;
  double stai_prescan = 0.0;
  double stai_postscan = 0.0;
  bool breath_hold_first_try = false;
  bool scan_paused = false;
  bool sedative_given = false;
  int satisfaction = 3;  // 1..5

  friend bool operator==(const ParticipantRow&, const ParticipantRow&) = default;
};

/// Problems with cohort CSV content or simulation parameters (bad header,
/// missing column, out-of-range value). Message names the line/column.
class CohortFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Simulation

enum Timepoint : std::size_t { kBaseline = 0, kPrescan = 1, kPostscan = 2 };

struct ArmSpec {
  int n = 25;
  std::array<double, 3> mean{};  // baseline, prescan, postscan
  std::array<double, 3> sd{9.0, 9.0, 9.0};
  /// Correlation of one participant's scores across timepoints.
  double correlation = 0.7;
  double p_breath_hold_first_try = 0.5;
  double p_scan_paused = 0.0;
  double p_sedative = 0.0;
  /// Relative weights of satisfaction ratings 1..5.
  std::array<double, 5> satisfaction_weights{1, 1, 1, 1, 1};
};

struct CohortSpec {
  ArmSpec mr;
  ArmSpec control;
  ScoringSpec scoring;

  /// Throws CohortFormatError when a parameter is out of range.
  void check() const;
};

/// Defaults reproducing the target group means and compliance
/// rates; see README for which values are assumptions.
CohortSpec default_cohort_spec(int n_per_arm = 25);

/// Reads overrides from a JSON object ({"mr": {...}, "control": {...}}),
/// starting from default_cohort_spec. Unknown keys are rejected.
CohortSpec cohort_spec_from_json(const nlohmann::json& j, int n_per_arm = 25);

/// Seeded draws: correlated normal STAI totals rounded and clipped to the
/// scoring range, Bernoulli compliance flags, categorical satisfaction.
std::vector<ParticipantRow> simulate_cohort(const CohortSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::array<std::string_view, 9> kCohortColumns = {
    "id", "arm", "stai_baseline", "stai_prescan", "stai_postscan", "breath_hold_first_try",
    "scan_paused", "sedative_given", "satisfaction"};

void write_cohort_csv(std::ostream& out, const std::vector<ParticipantRow>& rows);
/// Header row required with exactly the documented column names (any order).
std::vector<ParticipantRow> read_cohort_csv(std::istream& in, const ScoringSpec& scoring = {});
std::vector<ParticipantRow> read_cohort_csv_file(const std::filesystem::path& path, const ScoringSpec& scoring = {});

// ---------------------------------------------------------------------------
// Report

struct ArmSummary {
  Arm arm = Arm::kMr;
  int n = 0;
  std::array<double, 3> mean{};
  std::array<double, 3> sd{};
  int breath_hold_first_try = 0;
  int scan_paused = 0;
  int sedative_given = 0;
  int prescan_below_threshold = 0;
  double prescan_below_fraction = 0.0;
  double satisfaction_mean = 0.0;
  int satisfaction_good = 0;  // rated 4 or 5
};

struct TestEntry {
  std::string name;
  std::string method;
  std::string comparison;
  bool computable = true;
  std::string reason;  // why not computable
  StatResult result;
  std::optional<double> p_two_sided;  // Fisher only
  std::string note;
};

struct CohortReport {
  double anxiety_threshold = 40.0;
  Sidedness fisher_sided = Sidedness::kOne;
  ArmSummary mr;
  ArmSummary control;
  std::vector<TestEntry> tests;

  const TestEntry& test(std::string_view name) const;
};

/// Throws CohortFormatError when either arm is absent.
CohortReport cohort_report(const std::vector<ParticipantRow>& rows, Sidedness fisher_sided = Sidedness::kOne,
                           double anxiety_threshold = 40.0);

nlohmann::json to_json(const CohortReport& report);
std::string to_text(const CohortReport& report);

}  // namespace rehearsal::analytics
