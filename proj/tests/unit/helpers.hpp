#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rehearsal/engine.hpp"
#include "rehearsal/scenario.hpp"

namespace testutil {

using namespace rehearsal;

inline std::filesystem::path source_dir() { return REHEARSAL_SOURCE_DIR; }
inline std::filesystem::path asset(const std::string& name) { return source_dir() / "assets" / "scenarios" / name; }
inline std::filesystem::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("rehearsal-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Step prompt_step(std::string id, std::string text, Millis ms) {
  return Step{std::move(id), Prompt{std::move(text), ms}};
}

inline Step wait_step(std::string id, Millis ms) { return Step{std::move(id), TimedWait{ms, "idle"}}; }

inline Step breath_step(std::string id, Millis hold = 10000, Millis grace = 2000) {
  return Step{std::move(id), BreathHoldSpec{hold, grace, Prompt{"It's okay, breathe normally.", 4000}}};
}

inline Step choice_step(std::string id, std::vector<GazeTarget> targets) {
  return Step{std::move(id), Choice{std::move(targets)}};
}

/// One phase, one 1000 ms prompt.
inline Scenario minimal_scenario() {
  Scenario s;
  s.id = "mini";
  s.phases.push_back(Phase{"p1", PhaseKind::kTutorial, {prompt_step("hi", "hi", 1000)}, std::string(kEndMarker)});
  return s;
}

/// intro prompt (1000) -> debrief choice {replay, finish}.
inline Scenario choice_scenario() {
  Scenario s;
  s.id = "choice";
  s.phases.push_back(Phase{"intro", PhaseKind::kTutorial, {prompt_step("hello", "Hello", 1000)}, "debrief"});
  s.phases.push_back(Phase{"debrief",
                           PhaseKind::kDebrief,
                           {choice_step("end", {GazeTarget{"replay", "Replay the simulation", ReplayAction{}},
                                                GazeTarget{"finish", "Finish", FinishAction{}}})},
                           std::string(kEndMarker)});
  return s;
}

/// A single breath-hold step inside a practice phase, then a closing prompt.
inline Scenario breath_scenario(Millis hold = 10000, Millis grace = 2000) {
  Scenario s;
  s.id = "breath";
  s.phases.push_back(Phase{"practice",
                           PhaseKind::kBreathHoldPractice,
                           {breath_step("hold", hold, grace), prompt_step("after", "Well done", 1000)},
                           std::string(kEndMarker)});
  return s;
}

inline ScenarioPtr share(Scenario s) { return std::make_shared<const Scenario>(std::move(s)); }

inline InputEvent tick(Millis t) { return InputEvent{t, input::Tick{}}; }
inline InputEvent gaze_enter(Millis t, std::string id) { return InputEvent{t, input::GazeEnter{std::move(id)}}; }
inline InputEvent gaze_exit(Millis t, std::string id) { return InputEvent{t, input::GazeExit{std::move(id)}}; }
inline InputEvent hold_start(Millis t) { return InputEvent{t, input::BreathHoldStart{}}; }
inline InputEvent release(Millis t) { return InputEvent{t, input::BreathRelease{}}; }
inline InputEvent sensor(Millis t, double hr) {
  return InputEvent{t, input::Sensor{SensorSample{t, hr, RespPhase::kInhaling}}};
}

/// Applies inputs in order, collecting every emitted event (pending first).
inline std::vector<OutputEvent> run_inputs(EngineState& state, const std::vector<InputEvent>& inputs) {
  std::vector<OutputEvent> all = drain_pending(state);
  for (const auto& ev : inputs) {
    auto out = apply_input(state, ev);
    all.insert(all.end(), out.begin(), out.end());
  }
  return all;
}

template <typename T>
std::vector<T> events_of(const std::vector<OutputEvent>& events) {
  std::vector<T> found;
  for (const auto& ev : events) {
    if (const auto* p = std::get_if<T>(&ev.payload)) found.push_back(*p);
  }
  return found;
}

template <typename T>
std::vector<Millis> times_of(const std::vector<OutputEvent>& events) {
  std::vector<Millis> found;
  for (const auto& ev : events) {
    if (std::holds_alternative<T>(ev.payload)) found.push_back(ev.t_ms);
  }
  return found;
}

}  // namespace testutil
