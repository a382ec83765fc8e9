#include "rehearsal/playthrough.hpp"

#include <algorithm>
#include <deque>
#include <exception>
#include <limits>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rehearsal/errors.hpp"
#include "rehearsal/overloaded.hpp"
#include "rehearsal/wire.hpp"

namespace rehearsal::playthrough {

using nlohmann::json;

std::string_view to_string(Preset preset) {
  switch (preset) {
    case Preset::kCompliant: return "compliant";
    case Preset::kEarlyRelease: return "early_release";
    case Preset::kDistracted: return "distracted";
  }
  return "compliant";
}

std::optional<Preset> preset_from_string(std::string_view name) {
  for (auto p : kAllPresets) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::optional<PatientProfile> profile_from_name(std::string_view name) {
  if (name == "calm") return PatientProfile::calm();
  if (name == "anxious") return PatientProfile::anxious_noise_free();
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Trace files

namespace {

PatientProfile profile_from_json(const json& j, std::size_t line) {
  const std::string where = "line " + std::to_string(line) + ": ";
  PatientProfile p = PatientProfile::calm();
  for (const auto& [key, v] : j.items()) {
    if (key == "kind") continue;
    if (key == "name") {
      const auto named = v.is_string() ? profile_from_name(v.get<std::string>()) : std::nullopt;
      if (!named) throw TraceError(where + "profile name must be \"calm\" or \"anxious\"");
      p = *named;
    }
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "kind" || key == "name") continue;
    if (!v.is_number()) throw TraceError(where + "profile field " + key + " must be a number");
    const double x = v.get<double>();
    if (key == "baseline_hr_bpm") {
      p.baseline_hr_bpm = x;
    } else if (key == "anxiety_level") {
      p.anxiety_level = x;
    } else if (key == "anxiety_hr_gain_bpm") {
      p.anxiety_hr_gain_bpm = x;
    } else if (key == "relaxation_time_constant_s") {
      p.relaxation_time_constant_s = x;
    } else if (key == "noise_sd_bpm") {
      p.noise_sd_bpm = x;
    } else {
      throw TraceError(where + "unknown profile field " + key);
    }
  }
  try {
    p.check();
  } catch (const std::invalid_argument& e) {
    throw TraceError(where + e.what());
  }
  return p;
}

}  // namespace

PatientTrace parse_trace(std::string_view text) {
  PatientTrace trace;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TraceError(where + "invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw TraceError(where + "expected a JSON object");
    if (j.value("kind", "") == "profile") {
      if (trace.profile) throw TraceError(where + "second profile line");
      trace.profile = profile_from_json(j, line_no);
      continue;
    }
    InputEvent ev;
    try {
      ev = wire::input_from_json(j);
    } catch (const std::exception& e) {
      throw TraceError(where + e.what());
    }
    if (!trace.inputs.empty() && ev.t_ms < trace.inputs.back().t_ms) {
      throw TraceError(where + "timestamp " + std::to_string(ev.t_ms) + " is earlier than the previous " +
                       std::to_string(trace.inputs.back().t_ms));
    }
    trace.inputs.push_back(std::move(ev));
  }
  return trace;
}

PatientTrace load_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

void write_trace(std::ostream& out, const PatientTrace& trace) {
  if (trace.profile) {
    const auto& p = *trace.profile;
    out << json{{"kind", "profile"},
                {"baseline_hr_bpm", p.baseline_hr_bpm},
                {"anxiety_level", p.anxiety_level},
                {"anxiety_hr_gain_bpm", p.anxiety_hr_gain_bpm},
                {"relaxation_time_constant_s", p.relaxation_time_constant_s},
                {"noise_sd_bpm", p.noise_sd_bpm}}
               .dump()
        << '\n';
  }
  for (const auto& ev : trace.inputs) out << wire::to_json(ev).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Results

std::vector<std::string> RunResult::phases_entered() const {
  std::vector<std::string> out;
  for (const auto& ev : outputs) {
    if (const auto* p = std::get_if<output::PhaseEntered>(&ev.payload)) out.push_back(p->phase_id);
  }
  return out;
}

std::vector<BreathHoldResult> RunResult::breath_results() const {
  std::vector<BreathHoldResult> out;
  for (const auto& ev : outputs) {
    if (const auto* b = std::get_if<output::BreathResult>(&ev.payload)) out.push_back(b->result);
  }
  return out;
}

std::string RunResult::summary() const {
  std::ostringstream out;
  out << "completed=" << (completed ? "true" : "false") << " phases=" << phases_entered().size() << " breath=[";
  const auto results = breath_results();
  for (std::size_t i = 0; i < results.size(); ++i) {
    out << (i ? ", " : "") << to_string(results[i].outcome) << ' ' << results[i].held_ms;
  }
  out << "] duration_ms=" << end_ms;
  return out.str();
}

Scenario scenario_at_speed(const Scenario& scenario, int speed) {
  if (speed < 1) throw std::invalid_argument("speed must be a positive integer");
  return scale_scenario(scenario, speed);
}

// ---------------------------------------------------------------------------
// Driver

namespace {

constexpr Millis kSensorPeriodMs = 500;

std::set<std::string> gaze_ids(const Scenario& s) {
  std::set<std::string> ids;
  for (const auto& phase : s.phases) {
    for (const auto& step : phase.steps) {
      if (const auto* c = std::get_if<Choice>(&step.body)) {
        for (const auto& t : c->targets) ids.insert(t.id);
      } else if (const auto* q = std::get_if<QAGroup>(&step.body)) {
        for (const auto& item : q->items) ids.insert(item.question_label);
      }
    }
  }
  return ids;
}

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Driver {
 public:
  Driver(ScenarioPtr scenario, const RunOptions& options, std::optional<PatientProfile> profile, SessionLog* log)
      : scenario_(std::move(scenario)), log_(log) {
    result_.session_id = options.session_id;
    try {
      state_ = new_session(scenario_, options.seed);
    } catch (const EngineError& e) {
      throw TraceError(e.what());
    }
    auto opening = drain_pending(state_);
    if (log_) log_->append_outputs(result_.session_id, opening);
    result_.outputs = std::move(opening);
    tick_ms_ = std::max<Millis>(1, scenario_->tick_hint_ms / options.speed);
    if (profile) {
      model_.emplace(*profile, mix(options.seed ^ 0x5eed5eedULL));
      sample_period_ms_ = std::max<Millis>(1, kSensorPeriodMs / options.speed);
    }
  }

  const EngineState& state() const { return state_; }
  bool running() const { return state_.status == SessionStatus::kRunning; }
  Millis tick_ms() const { return tick_ms_; }

  void feed(const InputEvent& ev) {
    auto out = apply_input(state_, ev);
    if (log_) log_->append_step(result_.session_id, ev, out);
    result_.inputs.push_back(ev);
    result_.outputs.insert(result_.outputs.end(), out.begin(), out.end());
  }

  /// Generated sensor samples due at or before t.
  void sensors_until(Millis t) {
    if (!model_) return;
    while (running() && next_sample_ms_ <= t) {
      model_->advance(next_sample_ms_, state_.phase().kind);
      const auto sample = model_->sample(state_.breath == BreathPhase::kHolding);
      feed(InputEvent{next_sample_ms_, input::Sensor{sample}});
      next_sample_ms_ += sample_period_ms_;
    }
  }

  Millis next_sample_ms() const { return model_ ? next_sample_ms_ : std::numeric_limits<Millis>::max(); }

  RunResult finish() {
    result_.completed = state_.status == SessionStatus::kFinished;
    result_.end_ms = state_.clock_ms;
    return std::move(result_);
  }

 private:
  ScenarioPtr scenario_;
  SessionLog* log_;
  EngineState state_;
  RunResult result_;
  Millis tick_ms_ = 50;
  std::optional<PatientModel> model_;
  Millis sample_period_ms_ = kSensorPeriodMs;
  Millis next_sample_ms_ = 0;
};

Millis time_limit(const Scenario& s, const RunOptions& options, Millis last_input_ms) {
  if (options.max_duration_ms > 0) return options.max_duration_ms;
  return 4 * nominal_duration_ms(s) + last_input_ms + 60000 / options.speed;
}

/// Picks the target a cooperative patient looks at in a choice: finishing
/// first, then moving on, then whatever is offered first.
std::optional<std::string> preferred_target(const Choice& choice, const EngineState& state) {
  const GazeTarget* best = nullptr;
  int best_rank = 4;
  for (const auto& t : choice.targets) {
    if (state.step_targets.count(t.id) == 0) continue;
    const int rank = std::visit(Overloaded{[](const FinishAction&) { return 0; }, [](const GotoAction&) { return 1; },
                                           [](const PlayPromptAction&) { return 2; },
                                           [](const ReplayAction&) { return 3; }},
                                t.action);
    if (rank < best_rank) {
      best = &t;
      best_rank = rank;
    }
  }
  if (!best) return std::nullopt;
  return best->id;
}

}  // namespace

RunResult run_preset(const ScenarioPtr& scenario, Preset preset, const RunOptions& options, SessionLog* log) {
  const auto played = std::make_shared<const Scenario>(scenario_at_speed(*scenario, options.speed));
  Driver d(played, options, options.profile, log);
  const Millis limit = time_limit(*played, options, 0);

  // Inputs the patient has decided on but that fall due later.
  std::deque<InputEvent> planned;
  bool released_early = false;
  bool distracted_once = false;

  for (Millis t = 0; d.running() && t <= limit; t += d.tick_ms()) {
    d.sensors_until(t);
    while (d.running() && !planned.empty() && planned.front().t_ms <= t) {
      d.feed(planned.front());
      planned.pop_front();
    }
    if (!d.running()) break;

    const auto& st = d.state();
    if (st.breath == BreathPhase::kCommanded) {
      d.feed(InputEvent{t, input::BreathHoldStart{}});
      if (preset == Preset::kEarlyRelease && !released_early && st.phase().kind == PhaseKind::kBreathHoldPractice) {
        if (const auto* spec = std::get_if<BreathHoldSpec>(&st.step().body)) {
          planned.push_back(InputEvent{t + spec->hold_ms * 6 / 10, input::BreathRelease{}});
          released_early = true;
        }
      }
    }

    if (planned.empty() && st.gaze_target.empty() && !st.step_deadline_ms) {
      if (const auto* choice = std::get_if<Choice>(&st.step().body)) {
        if (const auto target = preferred_target(*choice, st)) {
          d.feed(InputEvent{t, input::GazeEnter{*target}});
          if (preset == Preset::kDistracted && !distracted_once) {
            distracted_once = true;
            const Millis away = t + played->dwell_threshold_ms * 3 / 4;
            // The headset reports progress at the moment the patient looks away.
            planned.push_back(InputEvent{away, input::Tick{}});
            planned.push_back(InputEvent{away, input::GazeExit{*target}});
            planned.push_back(InputEvent{away + d.tick_ms(), input::GazeEnter{*target}});
          }
        }
      } else if (const auto* qa = std::get_if<QAGroup>(&st.step().body); qa && !qa->optional) {
        for (const auto& item : qa->items) {
          if (std::find(st.answered.begin(), st.answered.end(), item.question_label) == st.answered.end() &&
              st.step_targets.count(item.question_label)) {
            d.feed(InputEvent{t, input::GazeEnter{item.question_label}});
            break;
          }
        }
      }
    }
    if (d.running()) d.feed(InputEvent{t, input::Tick{}});
  }
  return d.finish();
}

RunResult run_trace(const ScenarioPtr& scenario, const PatientTrace& trace, const RunOptions& options,
                    SessionLog* log) {
  const auto played = std::make_shared<const Scenario>(scenario_at_speed(*scenario, options.speed));
  const auto ids = gaze_ids(*played);
  std::vector<InputEvent> inputs;
  inputs.reserve(trace.inputs.size());
  for (std::size_t i = 0; i < trace.inputs.size(); ++i) {
    auto ev = trace.inputs[i];
    if (i > 0 && ev.t_ms < trace.inputs[i - 1].t_ms) {
      throw TraceError("trace input " + std::to_string(i + 1) + ": timestamp goes backwards");
    }
    const auto* enter = std::get_if<input::GazeEnter>(&ev.payload);
    const auto* exit = std::get_if<input::GazeExit>(&ev.payload);
    const std::string* target = enter ? &enter->target_id : exit ? &exit->target_id : nullptr;
    if (target && ids.count(*target) == 0) {
      throw TraceError("trace input " + std::to_string(i + 1) + ": gaze target \"" + *target +
                       "\" does not exist in scenario " + played->id);
    }
    ev.t_ms /= options.speed;
    if (auto* s = std::get_if<input::Sensor>(&ev.payload)) s->sample.t_ms = ev.t_ms;
    inputs.push_back(std::move(ev));
  }

  const auto profile = options.profile ? options.profile : trace.profile;
  Driver d(played, options, profile, log);
  const Millis limit = time_limit(*played, options, inputs.empty() ? 0 : inputs.back().t_ms);

  std::size_t next = 0;
  Millis next_tick = 0;
  Millis last_recorded_tick = -1;
  auto feed_checked = [&](const InputEvent& ev, std::size_t index) {
    try {
      d.feed(ev);
    } catch (const EngineError& e) {
      throw TraceError("trace input " + std::to_string(index + 1) + " at t=" + std::to_string(ev.t_ms) +
                       ": " + e.what());
    }
  };
  while (d.running()) {
    const Millis trace_t = next < inputs.size() ? inputs[next].t_ms : std::numeric_limits<Millis>::max();
    const Millis t = std::min({trace_t, d.next_sample_ms(), next_tick});
    if (t > limit) break;
    // Same instant: recorded input, then generated samples, then the tick.
    if (trace_t == t) {
      if (std::holds_alternative<input::Tick>(inputs[next].payload)) last_recorded_tick = t;
      feed_checked(inputs[next], next);
      ++next;
    } else if (d.next_sample_ms() == t) {
      d.sensors_until(t);
    } else {
      // A recorded tick at the same instant stands in for the grid tick.
      bool recorded_tick = last_recorded_tick == t;
      for (auto i = next; i < inputs.size() && inputs[i].t_ms == t && !recorded_tick; ++i) {
        recorded_tick = std::holds_alternative<input::Tick>(inputs[i].payload);
      }
      if (!recorded_tick) d.feed(InputEvent{t, input::Tick{}});
      next_tick += d.tick_ms();
    }
  }
  if (next < inputs.size() && !d.running() && !options.ignore_after_finish) {
    throw TraceError("trace input " + std::to_string(next + 1) + " at t=" + std::to_string(inputs[next].t_ms) +
                     " comes after the session finished at t=" + std::to_string(d.state().clock_ms));
  }
  return d.finish();
}

// ---------------------------------------------------------------------------
// Random traces and batches

PatientTrace random_trace(const Scenario& scenario, std::uint64_t seed, std::size_t length) {
  const auto id_set = gaze_ids(scenario);
  const std::vector<std::string> ids(id_set.begin(), id_set.end());
  std::mt19937_64 rng(seed);
  const Millis step_max = std::max<Millis>(1, scenario.tick_hint_ms * 6);
  std::uniform_int_distribution<Millis> gap(0, step_max);
  std::uniform_int_distribution<int> kind(0, 9);
  std::uniform_real_distribution<double> hr(55.0, 115.0);
  PatientTrace trace;
  Millis t = 0;
  for (std::size_t i = 0; i < length; ++i) {
    t += gap(rng);
    const int k = kind(rng);
    InputEvent ev{t, input::Tick{}};
    if (k <= 2 && !ids.empty()) {
      ev.payload = input::GazeEnter{ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)]};
    } else if (k == 3 && !ids.empty()) {
      ev.payload = input::GazeExit{ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)]};
    } else if (k == 4) {
      ev.payload = input::BreathHoldStart{};
    } else if (k == 5) {
      ev.payload = input::BreathRelease{};
    } else if (k == 6) {
      const auto phase = static_cast<RespPhase>(std::uniform_int_distribution<int>(0, 2)(rng));
      ev.payload = input::Sensor{SensorSample{t, std::round(hr(rng) * 10.0) / 10.0, phase}};
    }
    trace.inputs.push_back(std::move(ev));
  }
  return trace;
}

namespace {

std::string random_run(const ScenarioPtr& scenario, std::uint64_t seed, std::size_t index, std::size_t length) {
  RunOptions options;
  options.seed = seed;
  options.session_id = "run-" + std::to_string(index);
  options.ignore_after_finish = true;
  options.max_duration_ms = 1;  // stop right after the trace ends
  const auto trace = random_trace(*scenario, seed, length);
  if (!trace.inputs.empty()) options.max_duration_ms = trace.inputs.back().t_ms;
  auto log = SessionLog::in_memory();
  run_trace(scenario, trace, options, &log);
  return log.contents();
}

}  // namespace

std::vector<std::string> batch_random_runs_serial(const ScenarioPtr& scenario, std::uint64_t base_seed,
                                                  std::size_t runs, std::size_t trace_length) {
  std::vector<std::string> out(runs);
  for (std::size_t i = 0; i < runs; ++i) out[i] = random_run(scenario, base_seed + i, i, trace_length);
  return out;
}

std::vector<std::string> batch_random_runs_parallel(const ScenarioPtr& scenario, std::uint64_t base_seed,
                                                    std::size_t runs, std::size_t trace_length) {
  std::vector<std::string> out(runs);
  std::vector<std::exception_ptr> errors(runs);
  const auto n = static_cast<std::int64_t>(runs);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = random_run(scenario, base_seed + k, k, trace_length);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  // Report the failure of the lowest run index, as the serial loop would.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace rehearsal::playthrough
