#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rehearsal/biosignal.hpp"
#include "rehearsal/scenario.hpp"

namespace rehearsal {

// ---------------------------------------------------------------------------
// Inputs

namespace input {
struct GazeEnter {
  std::string target_id;
  friend bool operator==(const GazeEnter&, const GazeEnter&) = default;
};
struct GazeExit {
  std::string target_id;
  friend bool operator==(const GazeExit&, const GazeExit&) = default;
};
struct BreathHoldStart {
  friend bool operator==(const BreathHoldStart&, const BreathHoldStart&) = default;
};
struct BreathRelease {
  friend bool operator==(const BreathRelease&, const BreathRelease&) = default;
};
struct Sensor {
  SensorSample sample;
  friend bool operator==(const Sensor&, const Sensor&) = default;
};
struct Tick {
  friend bool operator==(const Tick&, const Tick&) = default;
};
}  // namespace input

using InputPayload =
    std::variant<input::GazeEnter, input::GazeExit, input::BreathHoldStart, input::BreathRelease, input::Sensor, input::Tick>;

struct InputEvent {
  Millis t_ms = 0;
  InputPayload payload;

  friend bool operator==(const InputEvent&, const InputEvent&) = default;
};

std::string_view kind_name(const InputPayload& payload);

// ---------------------------------------------------------------------------
// Outputs

enum class BreathOutcome { kSuccess, kEarlyRelease, kNoAttempt };

std::string_view to_string(BreathOutcome outcome);
BreathOutcome breath_outcome_from_string(std::string_view name);

struct BreathHoldResult {
  BreathOutcome outcome = BreathOutcome::kNoAttempt;
  Millis held_ms = 0;

  friend bool operator==(const BreathHoldResult&, const BreathHoldResult&) = default;
};

namespace output {
struct PhaseEntered {
  std::string phase_id;
  friend bool operator==(const PhaseEntered&, const PhaseEntered&) = default;
};
struct PromptShown {
  std::string text;
  Millis duration_ms = 0;
  friend bool operator==(const PromptShown&, const PromptShown&) = default;
};
struct Countdown {
  Millis remaining_ms = 0;
  friend bool operator==(const Countdown&, const Countdown&) = default;
};
struct DwellProgress {
  std::string target_id;
  double fraction = 0.0;
  friend bool operator==(const DwellProgress&, const DwellProgress&) = default;
};
/// `action` is the target's action name, or "answer" for Q&A items.
struct Selection {
  std::string target_id;
  std::string action;
  friend bool operator==(const Selection&, const Selection&) = default;
};
struct BreathCommand {
  std::string step_id;
  Millis hold_ms = 0;
  friend bool operator==(const BreathCommand&, const BreathCommand&) = default;
};
struct BreathResult {
  std::string step_id;
  BreathHoldResult result;
  friend bool operator==(const BreathResult&, const BreathResult&) = default;
};
struct RelaxationExtended {
  Millis extension_ms = 0;
  friend bool operator==(const RelaxationExtended&, const RelaxationExtended&) = default;
};
struct SessionFinished {
  friend bool operator==(const SessionFinished&, const SessionFinished&) = default;
};
}  // namespace output

using OutputPayload =
    std::variant<output::PhaseEntered, output::PromptShown, output::Countdown, output::DwellProgress, output::Selection,
                 output::BreathCommand, output::BreathResult, output::RelaxationExtended, output::SessionFinished>;

struct OutputEvent {
  Millis t_ms = 0;
  OutputPayload payload;

  friend bool operator==(const OutputEvent&, const OutputEvent&) = default;
};

std::string_view kind_name(const OutputPayload& payload);

// ---------------------------------------------------------------------------
// State

enum class SessionStatus { kRunning, kFinished };
enum class BreathPhase { kIdle, kCommanded, kHolding, kEvaluated };

std::string_view to_string(SessionStatus status);
std::string_view to_string(BreathPhase phase);

struct EngineState {
  ScenarioPtr scenario;
  std::uint64_t seed = 0;
  SessionStatus status = SessionStatus::kRunning;
  Millis clock_ms = 0;

  std::size_t phase_index = 0;
  std::size_t step_index = 0;
  Millis step_started_ms = 0;
  /// Timer of the active step: prompt or wait end, fallback prompt end, or
  /// the end of an answer/prompt played from a choice or Q&A group.
  std::optional<Millis> step_deadline_ms;
  /// Text being played under step_deadline_ms when the step itself is not a
  /// Prompt (fallback, answer, prompt chosen from a choice).
  std::string playing_text;

  /// Target currently looked at (empty when none). Cleared when a dwell
  /// completes, so a selection needs a fresh gaze_enter to repeat.
  std::string gaze_target;
  Millis gaze_since_ms = 0;
  /// Gazeable targets of the active step, with the time each became active.
  std::map<std::string, Millis> step_targets;
  /// Items of optional Q&A groups activated earlier in the current phase.
  std::map<std::string, Millis> ambient_targets;
  std::vector<std::size_t> ambient_groups;  // step indices in current phase
  std::vector<std::string> answered;        // Q&A labels answered in the active mandatory group

  BreathPhase breath = BreathPhase::kIdle;
  Millis breath_commanded_ms = 0;
  Millis hold_started_ms = 0;
  std::optional<BreathHoldResult> breath_result;

  std::vector<SensorSample> step_samples;
  std::vector<int> adaptation_applications;  // parallel to scenario->adaptation_rules
  int replay_count = 0;

  /// Events produced by new_session that have not been handed out yet.
  std::vector<OutputEvent> pending;

  const Phase& phase() const { return scenario->phases[phase_index]; }
  const Step& step() const { return phase().steps[step_index]; }
};

class EngineError : public std::runtime_error {
 public:
  enum class Code { kInvalidScenario, kNonMonotonicTime, kSessionFinished, kUnknownTarget, kRunaway };

  EngineError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

std::string_view to_string(EngineError::Code code);

/// Starts a session at phase[0], step[0], clock 0. The opening events
/// (phase_entered, first step activation) are left in `state.pending`.
/// Throws EngineError(kInvalidScenario) when validation reports errors.
EngineState new_session(ScenarioPtr scenario, std::uint64_t seed);

/// Removes and returns the pending events.
std::vector<OutputEvent> drain_pending(EngineState& state);

/// Applies one input in place. Any pending events are returned first.
/// Timers that fall due before ev.t_ms fire at their own due time, so
/// returned events may carry timestamps earlier than ev.t_ms (never earlier
/// than the previous clock). On error the state is left untouched.
std::vector<OutputEvent> apply_input(EngineState& state, const InputEvent& ev);

struct StepResult {
  EngineState state;
  std::vector<OutputEvent> events;
};

/// Pure transition: same (state, ev) always yields the same result.
StepResult step(const EngineState& state, const InputEvent& ev);

/// Dwell fraction of an active target at `now_ms` (>= clock): accumulated
/// continuous gaze over the dwell threshold, clamped to [0, 1].
/// Throws EngineError(kUnknownTarget) for targets not currently gazeable.
double dwell_progress(const EngineState& state, const std::string& target_id, Millis now_ms);

/// Extends the active relaxation step when a rule for the current phase
/// kind fires and still has applications left. Returns the emitted event.
std::optional<OutputEvent> apply_adaptation(EngineState& state, const SensorSummary& summary);

struct AdaptationResult {
  EngineState state;
  std::optional<OutputEvent> event;
};
AdaptationResult apply_adaptation(const EngineState& state, const SensorSummary& summary);

// ---------------------------------------------------------------------------
// Snapshot

struct SessionSnapshot {
  SessionStatus status = SessionStatus::kRunning;
  Millis clock_ms = 0;
  std::string phase_id;
  std::string phase_kind;
  std::string step_id;
  std::string step_kind;
  std::optional<std::string> prompt_text;
  std::optional<Millis> step_remaining_ms;
  std::optional<Millis> countdown_ms;
  std::string breath;
  std::map<std::string, double> dwell;
  int replay_count = 0;

  friend bool operator==(const SessionSnapshot&, const SessionSnapshot&) = default;
};

SessionSnapshot snapshot(const EngineState& state);

}  // namespace rehearsal
