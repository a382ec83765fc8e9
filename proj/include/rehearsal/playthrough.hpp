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

#include "rehearsal/biosignal.hpp"
#include "rehearsal/engine.hpp"
#include "rehearsal/session_log.hpp"

// Headless playthroughs: drives an engine session with either a recorded
// patient trace or a scripted behaviour preset, on the scenario's tick grid,
// and writes every input and output to a session log.

namespace rehearsal::playthrough {

/// Scripted patient behaviours.
///  - compliant: holds the breath on every command until the engine ends the
///    hold, and looks at the finishing target at the debrief choice.
///  - early_release: as compliant, but lets go of the practice breath-hold
///    after 60% of the hold window.
///  - distracted: as compliant, but the first look at a choice target breaks
///    off at 75% of the dwell threshold before the patient looks back.
enum class Preset { kCompliant, kEarlyRelease, kDistracted };

std::string_view to_string(Preset preset);
std::optional<Preset> preset_from_string(std::string_view name);
inline constexpr std::array<Preset, 3> kAllPresets = {Preset::kCompliant, Preset::kEarlyRelease,
                                                       Preset::kDistracted};

/// Recorded inputs plus an optional profile for generated sensor samples.
struct PatientTrace {
  std::vector<InputEvent> inputs;
  std::optional<PatientProfile> profile;

  friend bool operator==(const PatientTrace&, const PatientTrace&) = default;
};

/// Malformed trace, or a trace that does not fit the scenario (unknown gaze
/// target, input after the session finished, engine rejection).
class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NDJSON: one input event per line in wire format. An optional line
/// {"kind": "profile", ...} names a profile ("name": "calm" | "anxious")
/// and/or overrides its fields. Timestamps must be non-decreasing.
PatientTrace parse_trace(std::string_view text);
PatientTrace load_trace_file(const std::filesystem::path& path);
void write_trace(std::ostream& out, const PatientTrace& trace);

/// Named profile: "calm" or "anxious" (noise-free anxious reference).
std::optional<PatientProfile> profile_from_name(std::string_view name);

struct RunOptions {
  std::uint64_t seed = 0;
  /// Integer factor dividing scenario durations and trace timestamps.
  int speed = 1;
  std::string session_id = "session";
  /// Generates a sensor sample every 500 / speed ms when set. Overrides the
  /// trace's own profile.
  std::optional<PatientProfile> profile;
  /// Upper bound on session time; 0 picks 4x the nominal duration plus the
  /// last trace timestamp.
  Millis max_duration_ms = 0;
  /// When false, trace inputs after the session has finished are an error.
  bool ignore_after_finish = false;
};

struct RunResult {
  std::string session_id;
  bool completed = false;
  Millis end_ms = 0;
  std::vector<InputEvent> inputs;
  std::vector<OutputEvent> outputs;

  std::vector<std::string> phases_entered() const;
  std::vector<BreathHoldResult> breath_results() const;
  /// "completed=true phases=5 breath=[success 10000, success 10000] duration_ms=59150"
  std::string summary() const;
};

/// The scenario as played at the given speed (durations divided by speed).
Scenario scenario_at_speed(const Scenario& scenario, int speed);

/// Runs a preset on the scenario played at options.speed. When `log` is
/// given every step is appended to it.
RunResult run_preset(const ScenarioPtr& scenario, Preset preset, const RunOptions& options,
                     SessionLog* log = nullptr);

/// Replays a trace against the scenario played at options.speed (trace
/// timestamps are divided by the same factor), with ticks inserted
/// on the scenario's tick grid until the session finishes or times out.
RunResult run_trace(const ScenarioPtr& scenario, const PatientTrace& trace, const RunOptions& options,
                    SessionLog* log = nullptr);

/// Seeded random inputs over the scenario's targets (gaze, breath, sensor,
/// tick) with non-decreasing timestamps, for determinism and fuzz tests.
PatientTrace random_trace(const Scenario& scenario, std::uint64_t seed, std::size_t length);

/// Log bodies of many seeded random-trace runs (run i uses seed base + i and
/// session id "run-<i>"). The OpenMP version returns exactly the serial one.
std::vector<std::string> batch_random_runs_serial(const ScenarioPtr& scenario, std::uint64_t base_seed,
                                                  std::size_t runs, std::size_t trace_length);
std::vector<std::string> batch_random_runs_parallel(const ScenarioPtr& scenario, std::uint64_t base_seed,
                                                    std::size_t runs, std::size_t trace_length);

}  // namespace rehearsal::playthrough
