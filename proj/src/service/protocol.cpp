#include "rehearsal/service/protocol.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <regex>

#include "rehearsal/errors.hpp"
#include "rehearsal/wire.hpp"

namespace rehearsal::service {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownType: return "UNKNOWN_TYPE";
    case ErrorCode::kBadMessage: return "BAD_MESSAGE";
    case ErrorCode::kHandshakeRequired: return "HANDSHAKE_REQUIRED";
    case ErrorCode::kNoSession: return "NO_SESSION";
    case ErrorCode::kSessionActive: return "SESSION_ACTIVE";
    case ErrorCode::kSessionFinished: return "SESSION_FINISHED";
    case ErrorCode::kNonMonotonicTime: return "NON_MONOTONIC_TIME";
    case ErrorCode::kScenarioInvalid: return "SCENARIO_INVALID";
    case ErrorCode::kDuplicateMsgId: return "DUPLICATE_MSG_ID";
    case ErrorCode::kInternal: return "INTERNAL";
  }
  return "INTERNAL";
}

json error_message(ErrorCode code, const std::string& message, const json& msg_id) {
  return json{{"type", "error"}, {"code", to_string(code)}, {"message", message}, {"msg_id", msg_id}};
}

// ---------------------------------------------------------------------------
// Registry

ScenarioRegistry ScenarioRegistry::load_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("scenario directory '" + dir.string() + "' is not a readable directory");
  }
  std::vector<std::filesystem::path> files;
  for (std::filesystem::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->path().extension() == ".json") files.push_back(it->path());
  }
  if (ec) throw IoError("cannot list scenario directory '" + dir.string() + "': " + ec.message());
  std::sort(files.begin(), files.end());

  ScenarioRegistry registry;
  for (const auto& file : files) {
    try {
      registry.add(load_scenario_file(file.string()));
    } catch (const ParseError& e) {
      registry.problems_[file.stem().string()] = file.filename().string() + ": " + e.path() + ": " + e.what();
    }
  }
  return registry;
}

void ScenarioRegistry::add(Scenario scenario) {
  const auto report = validate_scenario(scenario);
  if (!report.ok()) {
    problems_[scenario.id] = report.to_text();
    scenarios_.erase(scenario.id);
    return;
  }
  problems_.erase(scenario.id);
  auto id = scenario.id;
  scenarios_[id] = std::make_shared<const Scenario>(std::move(scenario));
}

ScenarioPtr ScenarioRegistry::find(std::string_view id) const {
  const auto it = scenarios_.find(id);
  return it == scenarios_.end() ? nullptr : it->second;
}

std::optional<std::string> ScenarioRegistry::problem(std::string_view id) const {
  const auto it = problems_.find(id);
  if (it == problems_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ScenarioRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : scenarios_) out.push_back(id);
  return out;
}

// ---------------------------------------------------------------------------
// Connection

struct ConnectionHandler::Session {
  std::string id;
  EngineState state;
  SessionLog log;
  bool auto_tick = false;
  Millis started_at = 0;  // handler clock at start_session
  Millis next_tick = 0;   // session time of the next auto tick
};

namespace {

Millis steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string default_session_id(const Scenario& scenario) {
  static std::atomic<unsigned> counter{0};
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
  return scenario.id + "-" + stamp + "-" + std::to_string(++counter);
}

bool valid_session_id(const std::string& id) {
  static const std::regex pattern("[A-Za-z0-9_.-]{1,128}");
  return std::regex_match(id, pattern) && id != "." && id != "..";
}

json event_message(const OutputEvent& ev, const std::string& session_id, const json& msg_id) {
  return json{{"type", "event"}, {"msg_id", msg_id}, {"session_id", session_id}, {"event", wire::to_json(ev)}};
}

}  // namespace

ConnectionHandler::ConnectionHandler(std::shared_ptr<const ScenarioRegistry> registry, HandlerOptions options)
    : registry_(std::move(registry)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = steady_ms;
  if (!options_.make_session_id) options_.make_session_id = default_session_id;
  if (options_.auto_tick_ms < 1) options_.auto_tick_ms = 50;
}

ConnectionHandler::~ConnectionHandler() { close(); }

std::vector<json> ConnectionHandler::handle_text(std::string_view text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    return {error_message(ErrorCode::kBadMessage, std::string("invalid JSON: ") + e.what(), nullptr)};
  }
  return handle(msg);
}

std::vector<json> ConnectionHandler::handle(const json& msg) {
  if (!msg.is_object()) return {error_message(ErrorCode::kBadMessage, "message must be a JSON object", nullptr)};
  const json id = msg.contains("msg_id") ? msg["msg_id"] : json(nullptr);
  if (!id.is_string()) return {error_message(ErrorCode::kBadMessage, "msg_id must be a string", id)};
  if (!msg.contains("type") || !msg["type"].is_string()) {
    return {error_message(ErrorCode::kBadMessage, "type must be a string", id)};
  }
  if (!seen_ids_.insert(id.get<std::string>()).second) {
    return {error_message(ErrorCode::kDuplicateMsgId, "msg_id " + id.get<std::string>() + " was already used", id)};
  }
  const auto type = msg["type"].get<std::string>();
  try {
    if (type == "hello") return on_hello(msg, id);
    if (type == "start_session") return on_start(msg, id);
    if (type == "input") return on_input(msg, id);
    if (type == "get_snapshot") return on_snapshot(id);
    if (type == "end_session") return on_end(id);
  } catch (const std::exception& e) {
    return {error_message(ErrorCode::kInternal, e.what(), id)};
  }
  return {error_message(ErrorCode::kUnknownType, "unknown message type \"" + type + "\"", id)};
}

std::vector<json> ConnectionHandler::on_hello(const json& msg, const json& id) {
  if (msg.contains("protocol_version") && msg["protocol_version"] != kProtocolVersion) {
    return {error_message(ErrorCode::kBadMessage,
                          "unsupported protocol_version; this service speaks " + std::string(kProtocolVersion), id)};
  }
  greeted_ = true;
  return {json{{"type", "welcome"}, {"msg_id", id}, {"protocol_version", kProtocolVersion}}};
}

std::vector<json> ConnectionHandler::on_start(const json& msg, const json& id) {
  if (!greeted_) return {error_message(ErrorCode::kHandshakeRequired, "send hello first", id)};
  if (session_ && session_->state.status == SessionStatus::kRunning) {
    return {error_message(ErrorCode::kSessionActive, "session " + session_->id + " is still running", id)};
  }

  ScenarioPtr scenario;
  if (msg.contains("scenario")) {
    if (!msg["scenario"].is_object()) return {error_message(ErrorCode::kBadMessage, "scenario must be an object", id)};
    try {
      Scenario s = parse_scenario(msg["scenario"].dump());
      const auto report = validate_scenario(s);
      if (!report.ok()) return {error_message(ErrorCode::kScenarioInvalid, report.to_text(), id)};
      scenario = std::make_shared<const Scenario>(std::move(s));
    } catch (const ParseError& e) {
      return {error_message(ErrorCode::kScenarioInvalid, e.path() + ": " + e.what(), id)};
    }
  } else if (msg.contains("scenario_id") && msg["scenario_id"].is_string()) {
    const auto name = msg["scenario_id"].get<std::string>();
    scenario = registry_->find(name);
    if (!scenario) {
      const auto why = registry_->problem(name);
      return {error_message(ErrorCode::kScenarioInvalid,
                            why ? "scenario " + name + " is invalid: " + *why : "no scenario with id " + name, id)};
    }
  } else {
    return {error_message(ErrorCode::kBadMessage, "start_session needs scenario_id or scenario", id)};
  }

  std::uint64_t seed = 0;
  if (msg.contains("seed")) {
    if (!msg["seed"].is_number_unsigned()) return {error_message(ErrorCode::kBadMessage, "seed must be a non-negative integer", id)};
    seed = msg["seed"].get<std::uint64_t>();
  }
  bool auto_tick = false;
  if (msg.contains("auto_tick")) {
    if (!msg["auto_tick"].is_boolean()) return {error_message(ErrorCode::kBadMessage, "auto_tick must be a boolean", id)};
    auto_tick = msg["auto_tick"].get<bool>();
  }
  std::string session_id;
  if (msg.contains("session_id")) {
    if (!msg["session_id"].is_string() || !valid_session_id(msg["session_id"].get<std::string>())) {
      return {error_message(ErrorCode::kBadMessage, "session_id must match [A-Za-z0-9_.-]{1,128}", id)};
    }
    session_id = msg["session_id"].get<std::string>();
  } else {
    session_id = options_.make_session_id(*scenario);
  }

  std::optional<SessionLog> log;
  if (options_.log_dir.empty()) {
    log = SessionLog::in_memory();
  } else {
    const auto path = options_.log_dir / log_file_name(session_id);
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
      return {error_message(ErrorCode::kBadMessage, "a log for session " + session_id + " already exists", id)};
    }
    try {
      log = SessionLog::open_file(path);
    } catch (const IoError& e) {
      return {error_message(ErrorCode::kInternal, e.what(), id)};
    }
  }

  close();
  auto state = new_session(scenario, seed);
  auto opening = drain_pending(state);
  session_ = std::make_unique<Session>(Session{session_id, std::move(state), std::move(*log), auto_tick,
                                               options_.clock(), 0});
  session_->log.append_outputs(session_id, opening);

  std::vector<json> out;
  out.push_back(json{{"type", "session_started"},
                     {"msg_id", id},
                     {"session_id", session_id},
                     {"scenario_id", scenario->id},
                     {"auto_tick", auto_tick},
                     {"dwell_threshold_ms", scenario->dwell_threshold_ms},
                     {"tick_hint_ms", scenario->tick_hint_ms},
                     {"snapshot", wire::to_json(snapshot(session_->state))}});
  for (const auto& ev : opening) out.push_back(event_message(ev, session_id, id));
  return out;
}

std::vector<json> ConnectionHandler::apply(const InputEvent& ev, const json& id) {
  auto& s = *session_;
  if (s.state.status == SessionStatus::kFinished) {
    return {error_message(ErrorCode::kSessionFinished, "session " + s.id + " has finished", id)};
  }
  if (ev.t_ms < s.state.clock_ms) {
    return {error_message(ErrorCode::kNonMonotonicTime,
                          "t_ms " + std::to_string(ev.t_ms) + " is before the session clock " +
                              std::to_string(s.state.clock_ms),
                          id)};
  }
  std::vector<OutputEvent> events;
  try {
    events = apply_input(s.state, ev);
  } catch (const EngineError& e) {
    const auto code = e.code() == EngineError::Code::kNonMonotonicTime  ? ErrorCode::kNonMonotonicTime
                      : e.code() == EngineError::Code::kSessionFinished ? ErrorCode::kSessionFinished
                                                                        : ErrorCode::kInternal;
    return {error_message(code, e.what(), id)};
  }
  s.log.append_step(s.id, ev, events);
  std::vector<json> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(event_message(e, s.id, id));
  return out;
}

std::vector<json> ConnectionHandler::on_input(const json& msg, const json& id) {
  if (!session_) return {error_message(ErrorCode::kNoSession, "start a session before sending input", id)};
  if (!msg.contains("event")) return {error_message(ErrorCode::kBadMessage, "input needs an event", id)};
  InputEvent ev;
  try {
    ev = wire::input_from_json(msg["event"]);
  } catch (const std::exception& e) {
    return {error_message(ErrorCode::kBadMessage, e.what(), id)};
  }
  return apply(ev, id);
}

std::vector<json> ConnectionHandler::on_snapshot(const json& id) {
  if (!session_) return {error_message(ErrorCode::kNoSession, "no session", id)};
  return {json{{"type", "snapshot"},
               {"msg_id", id},
               {"session_id", session_->id},
               {"snapshot", wire::to_json(snapshot(session_->state))}}};
}

std::vector<json> ConnectionHandler::on_end(const json& id) {
  if (!session_) return {error_message(ErrorCode::kNoSession, "no session", id)};
  auto out = on_snapshot(id);
  close();
  return out;
}

std::vector<json> ConnectionHandler::auto_tick() {
  if (!auto_tick_enabled()) return {};
  auto& s = *session_;
  const Millis now = options_.clock() - s.started_at;
  std::vector<json> out;
  while (s.next_tick <= now && s.state.status == SessionStatus::kRunning) {
    const Millis t = s.next_tick;
    s.next_tick += options_.auto_tick_ms;
    // The client may already have moved the clock past this grid point.
    if (t < s.state.clock_ms) continue;
    auto msgs = apply(InputEvent{t, input::Tick{}}, nullptr);
    out.insert(out.end(), msgs.begin(), msgs.end());
  }
  return out;
}

bool ConnectionHandler::auto_tick_enabled() const {
  return session_ && session_->auto_tick && session_->state.status == SessionStatus::kRunning;
}

void ConnectionHandler::close() {
  if (!session_) return;
  try {
    session_->log.flush();
  } catch (const std::exception&) {
    // Nothing more can be done for a log that cannot be flushed on close.
  }
  session_.reset();
}

std::optional<std::string> ConnectionHandler::session_id() const {
  if (!session_) return std::nullopt;
  return session_->id;
}

std::string ConnectionHandler::log_contents() const { return session_ ? session_->log.contents() : std::string(); }

}  // namespace rehearsal::service
