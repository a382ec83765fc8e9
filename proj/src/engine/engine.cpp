#include "rehearsal/engine.hpp"

#include <algorithm>
#include <array>

#include "rehearsal/overloaded.hpp"

namespace rehearsal {

std::string_view kind_name(const InputPayload& payload) {
  return std::visit(Overloaded{
                        [](const input::GazeEnter&) { return std::string_view{"gaze_enter"}; },
                        [](const input::GazeExit&) { return std::string_view{"gaze_exit"}; },
                        [](const input::BreathHoldStart&) { return std::string_view{"breath_hold_start"}; },
                        [](const input::BreathRelease&) { return std::string_view{"breath_release"}; },
                        [](const input::Sensor&) { return std::string_view{"sensor"}; },
                        [](const input::Tick&) { return std::string_view{"tick"}; },
                    },
                    payload);
}

std::string_view kind_name(const OutputPayload& payload) {
  return std::visit(Overloaded{
                        [](const output::PhaseEntered&) { return std::string_view{"phase_entered"}; },
                        [](const output::PromptShown&) { return std::string_view{"prompt"}; },
                        [](const output::Countdown&) { return std::string_view{"countdown"}; },
                        [](const output::DwellProgress&) { return std::string_view{"dwell_progress"}; },
                        [](const output::Selection&) { return std::string_view{"selection"}; },
                        [](const output::BreathCommand&) { return std::string_view{"breath_command"}; },
                        [](const output::BreathResult&) { return std::string_view{"breath_result"}; },
                        [](const output::RelaxationExtended&) { return std::string_view{"relaxation_extended"}; },
                        [](const output::SessionFinished&) { return std::string_view{"session_finished"}; },
                    },
                    payload);
}

std::string_view to_string(BreathOutcome outcome) {
  switch (outcome) {
    case BreathOutcome::kSuccess: return "success";
    case BreathOutcome::kEarlyRelease: return "early_release";
    case BreathOutcome::kNoAttempt: return "no_attempt";
  }
  return "unknown";
}

BreathOutcome breath_outcome_from_string(std::string_view name) {
  if (name == "success") return BreathOutcome::kSuccess;
  if (name == "early_release") return BreathOutcome::kEarlyRelease;
  if (name == "no_attempt") return BreathOutcome::kNoAttempt;
  throw std::invalid_argument("unknown breath outcome \"" + std::string(name) + "\"");
}

std::string_view to_string(SessionStatus status) {
  return status == SessionStatus::kRunning ? "running" : "finished";
}

std::string_view to_string(BreathPhase phase) {
  switch (phase) {
    case BreathPhase::kIdle: return "idle";
    case BreathPhase::kCommanded: return "commanded";
    case BreathPhase::kHolding: return "holding";
    case BreathPhase::kEvaluated: return "evaluated";
  }
  return "unknown";
}

std::string_view to_string(EngineError::Code code) {
  switch (code) {
    case EngineError::Code::kInvalidScenario: return "InvalidScenario";
    case EngineError::Code::kNonMonotonicTime: return "NonMonotonicTime";
    case EngineError::Code::kSessionFinished: return "SessionFinished";
    case EngineError::Code::kUnknownTarget: return "UnknownTarget";
    case EngineError::Code::kRunaway: return "Runaway";
  }
  return "Unknown";
}

namespace {

// Bound on step activations at a single instant; only reachable through a
// cycle of phases with no timed steps.
constexpr int kMaxActivationsPerInput = 10000;

class Machine {
 public:
  Machine(EngineState& s, std::vector<OutputEvent>& out) : s_(s), out_(out) {}

  void enter_phase(std::size_t index) {
    clear_step_state();
    s_.ambient_targets.clear();
    s_.ambient_groups.clear();
    s_.phase_index = index;
    emit(output::PhaseEntered{s_.phase().id});
    activate_step(0);
  }

  // Fires every timer due before `t` (and at `t`, except those that let an
  // input at the same instant go first when !inclusive).
  void advance(Millis t, bool inclusive) {
    while (s_.status == SessionStatus::kRunning) {
      auto due = next_due(t, inclusive);
      if (!due) break;
      s_.clock_ms = due->t;
      fire(*due);
    }
  }

  void apply(const InputEvent& ev) {
    const Millis t = ev.t_ms;
    std::visit(Overloaded{
                   [&](const input::GazeEnter& g) { on_gaze_enter(g.target_id, t); },
                   [&](const input::GazeExit& g) { on_gaze_exit(g.target_id); },
                   [&](const input::BreathHoldStart&) { on_hold_start(t); },
                   [&](const input::BreathRelease&) { on_release(t); },
                   [&](const input::Sensor& sensor) { on_sensor(sensor.sample, t); },
                   [&](const input::Tick&) { on_tick(t); },
               },
               ev.payload);
  }

  std::optional<OutputEvent> adapt(const SensorSummary& summary) {
    if (s_.status != SessionStatus::kRunning) return std::nullopt;
    const auto& rules = s_.scenario->adaptation_rules;
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto& rule = rules[r];
      if (rule.phase_kind != s_.phase().kind) continue;
      if (s_.adaptation_applications[r] >= rule.max_applications) continue;
      if (!threshold_check(summary, rule)) continue;
      const auto& body = s_.step().body;
      const bool timed = std::holds_alternative<Prompt>(body) || std::holds_alternative<TimedWait>(body);
      if (!timed || !s_.step_deadline_ms) continue;
      *s_.step_deadline_ms += rule.extension_ms;
      ++s_.adaptation_applications[r];
      OutputEvent ev{s_.clock_ms, output::RelaxationExtended{rule.extension_ms}};
      out_.push_back(ev);
      return ev;
    }
    return std::nullopt;
  }

 private:
  enum class DueKind { kBreath = 0, kTimer = 1, kDwell = 2 };
  struct Due {
    Millis t;
    DueKind kind;
  };

  void emit(OutputPayload payload) { out_.push_back(OutputEvent{s_.clock_ms, std::move(payload)}); }

  const Scenario& scenario() const { return *s_.scenario; }

  void clear_step_state() {
    s_.step_deadline_ms.reset();
    s_.playing_text.clear();
    s_.step_targets.clear();
    s_.answered.clear();
    s_.breath = BreathPhase::kIdle;
    s_.breath_result.reset();
    s_.step_samples.clear();
  }

  void activate_targets(const std::vector<std::string>& ids) {
    for (const auto& id : ids) {
      s_.step_targets[id] = s_.clock_ms;
      emit(output::DwellProgress{id, 0.0});
    }
  }

  static std::vector<std::string> choice_ids(const Choice& c) {
    std::vector<std::string> ids;
    for (const auto& t : c.targets) ids.push_back(t.id);
    return ids;
  }

  static std::vector<std::string> qa_labels(const QAGroup& q) {
    std::vector<std::string> ids;
    for (const auto& item : q.items) ids.push_back(item.question_label);
    return ids;
  }

  void activate_step(std::size_t index) {
    if (++activations_ > kMaxActivationsPerInput) {
      throw EngineError(EngineError::Code::kRunaway, "scenario cycles without any timed step");
    }
    clear_step_state();
    s_.step_index = index;
    s_.step_started_ms = s_.clock_ms;
    const auto& step = s_.step();
    std::visit(Overloaded{
                   [&](const Prompt& p) {
                     emit(output::PromptShown{p.text, p.duration_ms});
                     s_.step_deadline_ms = s_.clock_ms + p.duration_ms;
                   },
                   [&](const TimedWait& w) { s_.step_deadline_ms = s_.clock_ms + w.duration_ms; },
                   [&](const BreathHoldSpec& b) {
                     s_.breath = BreathPhase::kCommanded;
                     s_.breath_commanded_ms = s_.clock_ms;
                     emit(output::BreathCommand{step.id, b.hold_ms});
                   },
                   [&](const Choice& c) { activate_targets(choice_ids(c)); },
                   [&](const QAGroup& q) {
                     if (!q.optional) {
                       activate_targets(qa_labels(q));
                       return;
                     }
                     s_.ambient_groups.push_back(index);
                     for (const auto& label : qa_labels(q)) {
                       s_.ambient_targets[label] = s_.clock_ms;
                       emit(output::DwellProgress{label, 0.0});
                     }
                     complete_step();
                   },
               },
               step.body);
  }

  void complete_step() {
    if (s_.step_index + 1 < s_.phase().steps.size()) {
      activate_step(s_.step_index + 1);
      return;
    }
    const auto& target = s_.phase().on_complete;
    if (target == kEndMarker) {
      finish();
      return;
    }
    enter_phase(*scenario().phase_index(target));
  }

  void finish() {
    clear_step_state();
    s_.ambient_targets.clear();
    s_.ambient_groups.clear();
    s_.gaze_target.clear();
    s_.status = SessionStatus::kFinished;
    emit(output::SessionFinished{});
  }

  std::optional<Millis> target_active_since(const std::string& id) const {
    if (auto it = s_.step_targets.find(id); it != s_.step_targets.end()) return it->second;
    if (auto it = s_.ambient_targets.find(id); it != s_.ambient_targets.end()) return it->second;
    return std::nullopt;
  }

  std::optional<Due> next_due(Millis t, bool inclusive) const {
    std::optional<Due> best;
    auto consider = [&](Millis due_t, DueKind kind, bool yields_to_input) {
      const bool eligible = due_t < t || (due_t == t && (inclusive || !yields_to_input));
      if (!eligible) return;
      if (!best || due_t < best->t || (due_t == best->t && kind < best->kind)) best = Due{due_t, kind};
    };

    if (const auto* b = std::get_if<BreathHoldSpec>(&s_.step().body)) {
      // A hold may still begin at exactly the end of the grace window.
      if (s_.breath == BreathPhase::kCommanded) consider(s_.breath_commanded_ms + b->grace_ms, DueKind::kBreath, true);
      if (s_.breath == BreathPhase::kHolding) consider(s_.hold_started_ms + b->hold_ms, DueKind::kBreath, false);
    }
    if (s_.step_deadline_ms) consider(*s_.step_deadline_ms, DueKind::kTimer, false);
    if (!s_.gaze_target.empty()) {
      if (auto since = target_active_since(s_.gaze_target)) {
        consider(std::max(*since, s_.gaze_since_ms) + scenario().dwell_threshold_ms, DueKind::kDwell, false);
      }
    }
    return best;
  }

  void fire(const Due& due) {
    switch (due.kind) {
      case DueKind::kBreath: return fire_breath();
      case DueKind::kTimer: return fire_timer();
      case DueKind::kDwell: return fire_dwell();
    }
  }

  void record_breath(BreathHoldResult result) {
    s_.breath = BreathPhase::kEvaluated;
    s_.breath_result = result;
    emit(output::BreathResult{s_.step().id, result});
  }

  void fire_breath() {
    const auto& spec = std::get<BreathHoldSpec>(s_.step().body);
    if (s_.breath == BreathPhase::kCommanded) {
      record_breath({BreathOutcome::kNoAttempt, 0});
    } else {
      record_breath({BreathOutcome::kSuccess, spec.hold_ms});
    }
    complete_step();
  }

  void fire_timer() {
    s_.step_deadline_ms.reset();
    s_.playing_text.clear();
    std::visit(Overloaded{
                   [&](const Choice& c) { activate_targets(choice_ids(c)); },
                   [&](const QAGroup& q) {
                     if (s_.answered.size() >= q.items.size()) {
                       complete_step();
                     } else {
                       activate_targets(qa_labels(q));
                     }
                   },
                   [&](const auto&) { complete_step(); },
               },
               s_.step().body);
  }

  const QAItem* find_ambient_item(const std::string& label) const {
    for (auto step_index : s_.ambient_groups) {
      const auto& group = std::get<QAGroup>(s_.phase().steps[step_index].body);
      for (const auto& item : group.items) {
        if (item.question_label == label) return &item;
      }
    }
    return nullptr;
  }

  void play(const Prompt& prompt) {
    s_.step_targets.clear();
    emit(output::PromptShown{prompt.text, prompt.duration_ms});
    s_.step_deadline_ms = s_.clock_ms + prompt.duration_ms;
    s_.playing_text = prompt.text;
  }

  void fire_dwell() {
    const std::string target = s_.gaze_target;
    s_.gaze_target.clear();
    emit(output::DwellProgress{target, 1.0});

    if (s_.step_targets.count(target) != 0) {
      if (const auto* choice = std::get_if<Choice>(&s_.step().body)) {
        const auto it = std::find_if(choice->targets.begin(), choice->targets.end(),
                                     [&](const GazeTarget& g) { return g.id == target; });
        emit(output::Selection{target, std::string(action_name(it->action))});
        run_action(it->action);
        return;
      }
      const auto& group = std::get<QAGroup>(s_.step().body);
      for (const auto& item : group.items) {
        if (item.question_label != target) continue;
        emit(output::Selection{target, "answer"});
        if (std::find(s_.answered.begin(), s_.answered.end(), target) == s_.answered.end()) {
          s_.answered.push_back(target);
        }
        play(item.answer);
        return;
      }
      return;
    }
    if (const auto* item = find_ambient_item(target)) {
      emit(output::Selection{target, "answer"});
      emit(output::PromptShown{item->answer.text, item->answer.duration_ms});
    }
  }

  void run_action(const TargetAction& action) {
    std::visit(Overloaded{
                   [&](const GotoAction& g) { enter_phase(*scenario().phase_index(g.phase_id)); },
                   [&](const ReplayAction&) {
                     ++s_.replay_count;
                     s_.gaze_target.clear();
                     enter_phase(0);
                   },
                   [&](const FinishAction&) { finish(); },
                   [&](const PlayPromptAction& p) { play(*scenario().find_prompt_step(p.prompt_step_id)); },
               },
               action);
  }

  bool is_active(const std::string& id) const { return target_active_since(id).has_value(); }

  void on_gaze_enter(const std::string& id, Millis t) {
    if (s_.gaze_target == id) return;
    if (!s_.gaze_target.empty() && is_active(s_.gaze_target)) emit(output::DwellProgress{s_.gaze_target, 0.0});
    s_.gaze_target = id;
    s_.gaze_since_ms = t;
    if (is_active(id)) emit(output::DwellProgress{id, 0.0});
  }

  void on_gaze_exit(const std::string& id) {
    if (s_.gaze_target != id) return;
    s_.gaze_target.clear();
    if (is_active(id)) emit(output::DwellProgress{id, 0.0});
  }

  void on_hold_start(Millis t) {
    if (!std::holds_alternative<BreathHoldSpec>(s_.step().body)) return;
    if (s_.breath != BreathPhase::kCommanded) return;
    s_.breath = BreathPhase::kHolding;
    s_.hold_started_ms = t;
  }

  void on_release(Millis t) {
    if (s_.breath != BreathPhase::kHolding) return;
    const auto& spec = std::get<BreathHoldSpec>(s_.step().body);
    const Millis held = t - s_.hold_started_ms;
    if (held == 0) {
      // Zero-length hold: treat as never started.
      s_.breath = BreathPhase::kCommanded;
      return;
    }
    record_breath({BreathOutcome::kEarlyRelease, held});
    play(spec.fallback_prompt);
  }

  void on_sensor(SensorSample sample, Millis t) {
    sample.t_ms = t;
    s_.step_samples.push_back(sample);
    const auto kind = s_.phase().kind;
    const auto& rules = scenario().adaptation_rules;
    const bool watched =
        std::any_of(rules.begin(), rules.end(), [kind](const AdaptationRule& r) { return r.phase_kind == kind; });
    if (!watched) return;
    adapt(summarize_window(s_.step_samples, s_.step_started_ms, t + 1));
  }

  void on_tick(Millis t) {
    if (const auto* b = std::get_if<BreathHoldSpec>(&s_.step().body)) {
      if (s_.breath == BreathPhase::kCommanded) emit(output::Countdown{b->hold_ms});
      if (s_.breath == BreathPhase::kHolding) emit(output::Countdown{s_.hold_started_ms + b->hold_ms - t});
    }
    if (!s_.gaze_target.empty() && is_active(s_.gaze_target)) {
      emit(output::DwellProgress{s_.gaze_target, dwell_progress(s_, s_.gaze_target, t)});
    }
  }

  EngineState& s_;
  std::vector<OutputEvent>& out_;
  int activations_ = 0;
};

}  // namespace

EngineState new_session(ScenarioPtr scenario, std::uint64_t seed) {
  if (!scenario) throw EngineError(EngineError::Code::kInvalidScenario, "no scenario");
  auto report = validate_scenario(*scenario);
  if (!report.ok()) {
    throw EngineError(EngineError::Code::kInvalidScenario, "scenario failed validation:\n" + report.to_text());
  }
  EngineState state;
  state.scenario = std::move(scenario);
  state.seed = seed;
  state.adaptation_applications.assign(state.scenario->adaptation_rules.size(), 0);
  Machine machine(state, state.pending);
  machine.enter_phase(0);
  return state;
}

std::vector<OutputEvent> drain_pending(EngineState& state) {
  std::vector<OutputEvent> out;
  out.swap(state.pending);
  return out;
}

std::vector<OutputEvent> apply_input(EngineState& state, const InputEvent& ev) {
  if (state.status == SessionStatus::kFinished) {
    throw EngineError(EngineError::Code::kSessionFinished, "input after session finished");
  }
  if (ev.t_ms < state.clock_ms) {
    throw EngineError(EngineError::Code::kNonMonotonicTime,
                      "input at t=" + std::to_string(ev.t_ms) + " precedes clock " + std::to_string(state.clock_ms));
  }
  EngineState next = state;
  std::vector<OutputEvent> out = drain_pending(next);
  Machine machine(next, out);
  machine.advance(ev.t_ms, false);
  next.clock_ms = ev.t_ms;
  if (next.status == SessionStatus::kRunning) {
    machine.apply(ev);
    machine.advance(ev.t_ms, true);
  }
  state = std::move(next);
  return out;
}

StepResult step(const EngineState& state, const InputEvent& ev) {
  StepResult result{state, {}};
  result.events = apply_input(result.state, ev);
  return result;
}

double dwell_progress(const EngineState& state, const std::string& target_id, Millis now_ms) {
  std::optional<Millis> since;
  if (auto it = state.step_targets.find(target_id); it != state.step_targets.end()) since = it->second;
  if (auto it = state.ambient_targets.find(target_id); it != state.ambient_targets.end()) since = it->second;
  if (!since) throw EngineError(EngineError::Code::kUnknownTarget, "target \"" + target_id + "\" is not active");
  if (now_ms < state.clock_ms) throw EngineError(EngineError::Code::kNonMonotonicTime, "query time precedes clock");
  if (state.gaze_target != target_id) return 0.0;
  const Millis start = std::max(*since, state.gaze_since_ms);
  const double fraction =
      static_cast<double>(now_ms - start) / static_cast<double>(state.scenario->dwell_threshold_ms);
  return std::clamp(fraction, 0.0, 1.0);
}

std::optional<OutputEvent> apply_adaptation(EngineState& state, const SensorSummary& summary) {
  std::vector<OutputEvent> sink;
  Machine machine(state, sink);
  return machine.adapt(summary);
}

AdaptationResult apply_adaptation(const EngineState& state, const SensorSummary& summary) {
  AdaptationResult result{state, std::nullopt};
  result.event = apply_adaptation(result.state, summary);
  return result;
}

SessionSnapshot snapshot(const EngineState& state) {
  SessionSnapshot snap;
  snap.status = state.status;
  snap.clock_ms = state.clock_ms;
  snap.replay_count = state.replay_count;
  if (state.status == SessionStatus::kFinished) return snap;

  const auto& phase = state.phase();
  const auto& step = state.step();
  snap.phase_id = phase.id;
  snap.phase_kind = std::string(to_string(phase.kind));
  snap.step_id = step.id;
  snap.step_kind = std::string(step_kind_name(step.body));
  snap.breath = std::string(to_string(state.breath));
  if (const auto* p = std::get_if<Prompt>(&step.body)) {
    snap.prompt_text = p->text;
  } else if (!state.playing_text.empty()) {
    snap.prompt_text = state.playing_text;
  }
  if (state.step_deadline_ms) snap.step_remaining_ms = *state.step_deadline_ms - state.clock_ms;
  if (const auto* b = std::get_if<BreathHoldSpec>(&step.body)) {
    if (state.breath == BreathPhase::kCommanded) snap.countdown_ms = b->hold_ms;
    if (state.breath == BreathPhase::kHolding) snap.countdown_ms = state.hold_started_ms + b->hold_ms - state.clock_ms;
  }
  for (const auto* targets : {&state.step_targets, &state.ambient_targets}) {
    for (const auto& [id, since] : *targets) snap.dwell[id] = dwell_progress(state, id, state.clock_ms);
  }
  return snap;
}

}  // namespace rehearsal
