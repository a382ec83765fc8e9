#include "rehearsal/wire.hpp"

#include "rehearsal/overloaded.hpp"

namespace rehearsal::wire {

namespace {

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw WireError(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string need_string(const json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_string()) throw WireError(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

Millis need_int(const json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_number_integer()) throw WireError(std::string("field \"") + key + "\" must be an integer");
  return v.get<Millis>();
}

double need_number(const json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_number()) throw WireError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

json with_header(Millis t, std::string_view kind, json body) {
  body["t_ms"] = t;
  body["kind"] = std::string(kind);
  return body;
}

}  // namespace

json to_json(const BreathHoldResult& result) {
  return json{{"outcome", std::string(to_string(result.outcome))}, {"held_ms", result.held_ms}};
}

BreathHoldResult breath_result_from_json(const json& j) {
  try {
    return BreathHoldResult{breath_outcome_from_string(need_string(j, "outcome")), need_int(j, "held_ms")};
  } catch (const std::invalid_argument& e) {
    throw WireError(e.what());
  }
}

json payload_json(const InputPayload& payload) {
  return std::visit(Overloaded{
                        [](const input::GazeEnter& g) { return json{{"target_id", g.target_id}}; },
                        [](const input::GazeExit& g) { return json{{"target_id", g.target_id}}; },
                        [](const input::Sensor& s) {
                          return json{{"hr_bpm", s.sample.hr_bpm},
                                      {"resp_phase", std::string(to_string(s.sample.resp_phase))}};
                        },
                        [](const auto&) { return json::object(); },
                    },
                    payload);
}

json to_json(const InputEvent& ev) { return with_header(ev.t_ms, kind_name(ev.payload), payload_json(ev.payload)); }

InputEvent input_from_json(const json& j) {
  if (!j.is_object()) throw WireError("input event must be an object");
  InputEvent ev;
  ev.t_ms = need_int(j, "t_ms");
  if (ev.t_ms < 0) throw WireError("t_ms must be non-negative");
  const auto kind = need_string(j, "kind");
  if (kind == "gaze_enter") {
    ev.payload = input::GazeEnter{need_string(j, "target_id")};
  } else if (kind == "gaze_exit") {
    ev.payload = input::GazeExit{need_string(j, "target_id")};
  } else if (kind == "breath_hold_start") {
    ev.payload = input::BreathHoldStart{};
  } else if (kind == "breath_release") {
    ev.payload = input::BreathRelease{};
  } else if (kind == "tick") {
    ev.payload = input::Tick{};
  } else if (kind == "sensor") {
    SensorSample sample;
    sample.t_ms = ev.t_ms;
    sample.hr_bpm = need_number(j, "hr_bpm");
    if (!(sample.hr_bpm > 0.0)) throw WireError("hr_bpm must be positive");
    try {
      sample.resp_phase = j.contains("resp_phase") ? resp_phase_from_string(need_string(j, "resp_phase"))
                                                   : RespPhase::kInhaling;
    } catch (const std::invalid_argument& e) {
      throw WireError(e.what());
    }
    ev.payload = input::Sensor{sample};
  } else {
    throw WireError("unknown input kind \"" + kind + "\"");
  }
  return ev;
}

json payload_json(const OutputPayload& payload) {
  return std::visit(
      Overloaded{
          [](const output::PhaseEntered& p) { return json{{"phase_id", p.phase_id}}; },
          [](const output::PromptShown& p) { return json{{"text", p.text}, {"duration_ms", p.duration_ms}}; },
          [](const output::Countdown& c) { return json{{"remaining_ms", c.remaining_ms}}; },
          [](const output::DwellProgress& d) { return json{{"target_id", d.target_id}, {"fraction", d.fraction}}; },
          [](const output::Selection& s) { return json{{"target_id", s.target_id}, {"action", s.action}}; },
          [](const output::BreathCommand& b) { return json{{"step_id", b.step_id}, {"hold_ms", b.hold_ms}}; },
          [](const output::BreathResult& b) {
            auto j = to_json(b.result);
            j["step_id"] = b.step_id;
            return j;
          },
          [](const output::RelaxationExtended& r) { return json{{"extension_ms", r.extension_ms}}; },
          [](const output::SessionFinished&) { return json::object(); },
      },
      payload);
}

json to_json(const OutputEvent& ev) { return with_header(ev.t_ms, kind_name(ev.payload), payload_json(ev.payload)); }

OutputEvent output_from_json(const json& j) {
  if (!j.is_object()) throw WireError("output event must be an object");
  OutputEvent ev;
  ev.t_ms = need_int(j, "t_ms");
  const auto kind = need_string(j, "kind");
  if (kind == "phase_entered") {
    ev.payload = output::PhaseEntered{need_string(j, "phase_id")};
  } else if (kind == "prompt") {
    ev.payload = output::PromptShown{need_string(j, "text"), need_int(j, "duration_ms")};
  } else if (kind == "countdown") {
    ev.payload = output::Countdown{need_int(j, "remaining_ms")};
  } else if (kind == "dwell_progress") {
    ev.payload = output::DwellProgress{need_string(j, "target_id"), need_number(j, "fraction")};
  } else if (kind == "selection") {
    ev.payload = output::Selection{need_string(j, "target_id"), need_string(j, "action")};
  } else if (kind == "breath_command") {
    ev.payload = output::BreathCommand{need_string(j, "step_id"), need_int(j, "hold_ms")};
  } else if (kind == "breath_result") {
    ev.payload = output::BreathResult{need_string(j, "step_id"), breath_result_from_json(j)};
  } else if (kind == "relaxation_extended") {
    ev.payload = output::RelaxationExtended{need_int(j, "extension_ms")};
  } else if (kind == "session_finished") {
    ev.payload = output::SessionFinished{};
  } else {
    throw WireError("unknown output kind \"" + kind + "\"");
  }
  return ev;
}

json to_json(const SessionSnapshot& snap) {
  json j{{"status", std::string(to_string(snap.status))},
         {"clock_ms", snap.clock_ms},
         {"phase_id", snap.phase_id},
         {"phase_kind", snap.phase_kind},
         {"step_id", snap.step_id},
         {"step_kind", snap.step_kind},
         {"breath", snap.breath},
         {"dwell", snap.dwell},
         {"replay_count", snap.replay_count}};
  j["prompt_text"] = snap.prompt_text ? json(*snap.prompt_text) : json(nullptr);
  j["step_remaining_ms"] = snap.step_remaining_ms ? json(*snap.step_remaining_ms) : json(nullptr);
  j["countdown_ms"] = snap.countdown_ms ? json(*snap.countdown_ms) : json(nullptr);
  return j;
}

SessionSnapshot snapshot_from_json(const json& j) {
  if (!j.is_object()) throw WireError("snapshot must be an object");
  SessionSnapshot snap;
  const auto status = need_string(j, "status");
  if (status == "running") {
    snap.status = SessionStatus::kRunning;
  } else if (status == "finished") {
    snap.status = SessionStatus::kFinished;
  } else {
    throw WireError("unknown status \"" + status + "\"");
  }
  snap.clock_ms = need_int(j, "clock_ms");
  snap.phase_id = need_string(j, "phase_id");
  snap.phase_kind = need_string(j, "phase_kind");
  snap.step_id = need_string(j, "step_id");
  snap.step_kind = need_string(j, "step_kind");
  snap.breath = need_string(j, "breath");
  snap.replay_count = static_cast<int>(need_int(j, "replay_count"));
  const auto& dwell = need(j, "dwell");
  if (!dwell.is_object()) throw WireError("dwell must be an object");
  for (const auto& [id, fraction] : dwell.items()) {
    if (!fraction.is_number()) throw WireError("dwell fractions must be numbers");
    snap.dwell[id] = fraction.get<double>();
  }
  if (const auto& v = need(j, "prompt_text"); !v.is_null()) snap.prompt_text = need_string(j, "prompt_text");
  if (const auto& v = need(j, "step_remaining_ms"); !v.is_null()) snap.step_remaining_ms = need_int(j, "step_remaining_ms");
  if (const auto& v = need(j, "countdown_ms"); !v.is_null()) snap.countdown_ms = need_int(j, "countdown_ms");
  return snap;
}

}  // namespace rehearsal::wire
