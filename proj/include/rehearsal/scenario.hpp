#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rehearsal {

/// All durations and timestamps are integer milliseconds.
using Millis = std::int64_t;

/// Transition target that ends the session instead of entering a phase.
inline constexpr std::string_view kEndMarker = "END";

enum class PhaseKind { kTutorial, kRelaxation, kBreathHoldPractice, kScan, kDebrief };

std::string_view to_string(PhaseKind kind);
std::optional<PhaseKind> phase_kind_from_string(std::string_view name);

struct Prompt {
  std::string text;
  Millis duration_ms = 0;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

/// Silent timed segment (scene transitions, free exploration). `cue` names
/// what the client is expected to show.
struct TimedWait {
  Millis duration_ms = 0;
  std::string cue;

  friend bool operator==(const TimedWait&, const TimedWait&) = default;
};

struct BreathHoldSpec {
  Millis hold_ms = 10000;
  Millis grace_ms = 2000;
  Prompt fallback_prompt;

  friend bool operator==(const BreathHoldSpec&, const BreathHoldSpec&) = default;
};

struct GotoAction {
  std::string phase_id;
  friend bool operator==(const GotoAction&, const GotoAction&) = default;
};
struct ReplayAction {
  friend bool operator==(const ReplayAction&, const ReplayAction&) = default;
};
struct FinishAction {
  friend bool operator==(const FinishAction&, const FinishAction&) = default;
};
/// Plays a Prompt step (looked up by step id anywhere in the scenario) and
/// then re-offers the same choice.
struct PlayPromptAction {
  std::string prompt_step_id;
  friend bool operator==(const PlayPromptAction&, const PlayPromptAction&) = default;
};

using TargetAction = std::variant<GotoAction, ReplayAction, FinishAction, PlayPromptAction>;

std::string_view action_name(const TargetAction& action);

struct GazeTarget {
  std::string id;
  std::string label;
  TargetAction action;

  friend bool operator==(const GazeTarget&, const GazeTarget&) = default;
};

struct Choice {
  std::vector<GazeTarget> targets;
  friend bool operator==(const Choice&, const Choice&) = default;
};

struct QAItem {
  std::string question_label;
  Prompt answer;
  friend bool operator==(const QAItem&, const QAItem&) = default;
};

/// Gaze-selectable questions. An optional group does not block the phase:
/// its items stay selectable for the rest of the phase. A mandatory group
/// completes once every item has been answered.
struct QAGroup {
  std::vector<QAItem> items;
  bool optional = true;
  friend bool operator==(const QAGroup&, const QAGroup&) = default;
};

using StepBody = std::variant<Prompt, TimedWait, BreathHoldSpec, Choice, QAGroup>;

std::string_view step_kind_name(const StepBody& body);

struct Step {
  std::string id;
  StepBody body;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Phase {
  std::string id;
  PhaseKind kind = PhaseKind::kTutorial;
  std::vector<Step> steps;
  std::string on_complete;  // phase id or kEndMarker

  friend bool operator==(const Phase&, const Phase&) = default;
};

enum class Metric { kMeanHrBpm, kMinHrBpm, kMaxHrBpm };

std::string_view to_string(Metric metric);

struct AdaptationRule {
  PhaseKind phase_kind = PhaseKind::kRelaxation;
  Metric metric = Metric::kMeanHrBpm;
  double threshold = 0.0;
  Millis extension_ms = 0;
  int max_applications = 1;

  friend bool operator==(const AdaptationRule&, const AdaptationRule&) = default;
};

struct Scenario {
  std::string id;
  std::string version = "1";
  Millis dwell_threshold_ms = 2000;
  Millis tick_hint_ms = 50;
  std::vector<Phase> phases;
  std::vector<AdaptationRule> adaptation_rules;

  friend bool operator==(const Scenario&, const Scenario&) = default;

  /// Index of the phase with the given id, if any.
  std::optional<std::size_t> phase_index(std::string_view phase_id) const;
  /// First Prompt step with the given id across all phases.
  const Prompt* find_prompt_step(std::string_view step_id) const;
};

using ScenarioPtr = std::shared_ptr<const Scenario>;

// ---------------------------------------------------------------------------
// Parsing

class ParseError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kSchema };

  ParseError(Kind kind, std::string path, std::string message);

  Kind kind() const { return kind_; }
  /// JSONPath-like location (`$.phases[0].steps[1].prompt.duration_ms`);
  /// for syntax errors, `@<byte offset>`.
  const std::string& path() const { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

/// Strict parse of a scenario document. Unknown fields are rejected, and
/// field types (including positivity of durations) are enforced. No
/// cross-reference checks; see validate_scenario.
Scenario parse_scenario(std::string_view text);

/// Canonical JSON text for a scenario (2-space indented).
std::string serialize_scenario(const Scenario& scenario);

Scenario load_scenario_file(const std::string& path);

// ---------------------------------------------------------------------------
// Validation

enum class IssueCode {
  kDuplicateId,
  kDanglingTarget,
  kUnreachablePhase,
  kActionOutsideDebrief,
  kAdaptationKindAbsent,
  kUnsupportedMetric,
  kUnknownPrompt,
  kZeroDurationPhase,
};

std::string_view to_string(IssueCode code);

struct Issue {
  std::string path;
  IssueCode code;
  std::string message;
};

struct ValidationReport {
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool ok() const { return errors.empty(); }
  std::string to_text() const;
};

ValidationReport validate_scenario(const Scenario& scenario);

// ---------------------------------------------------------------------------
// Shipped content

/// The built-in CT preparation scenario: tour, relaxation, breath-hold
/// practice, simulated scan, debrief with questions and Replay/Finish.
Scenario canonical_default_scenario();

/// Divides every duration in the scenario by `factor` (integer division,
/// clamped to at least 1 ms). Adaptation thresholds are unchanged.
Scenario scale_scenario(const Scenario& scenario, int factor);

/// Nominal playthrough time: sum of all timed step durations plus one hold
/// window per breath-hold and one dwell threshold per choice. Optional Q&A
/// is not counted.
Millis nominal_duration_ms(const Scenario& scenario);

}  // namespace rehearsal
