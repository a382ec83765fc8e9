#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rehearsal/engine.hpp"
#include "rehearsal/session_log.hpp"

// Message protocol of the session service, independent of the transport.
// Every message is one JSON object with a "type" and a client-chosen
// "msg_id"; see docs/protocol.md for the schemas.

namespace rehearsal::service {

using nlohmann::json;

inline constexpr std::string_view kProtocolVersion = "1";

enum class ErrorCode {
  kUnknownType,
  kBadMessage,
  kHandshakeRequired,
  kNoSession,
  kSessionActive,
  kSessionFinished,
  kNonMonotonicTime,
  kScenarioInvalid,
  kDuplicateMsgId,
  kInternal,
};

std::string_view to_string(ErrorCode code);

/// Scenarios offered by a service, keyed by scenario id. Read-only once
/// built. Files that fail to parse or validate are remembered so that a
/// request for them can say why.
class ScenarioRegistry {
 public:
  /// Loads every *.json file in `dir`. Throws IoError when the directory
  /// cannot be read.
  static ScenarioRegistry load_dir(const std::filesystem::path& dir);

  /// Adds a scenario; a scenario with validation errors is recorded as a
  /// problem under its id instead.
  void add(Scenario scenario);

  ScenarioPtr find(std::string_view id) const;
  /// Why an id is unavailable (parse or validation failure), if known.
  std::optional<std::string> problem(std::string_view id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, ScenarioPtr, std::less<>> scenarios_;
  std::map<std::string, std::string, std::less<>> problems_;
};

struct HandlerOptions {
  /// Directory for `<session_id>.ndjson` logs; empty keeps logs in memory.
  std::filesystem::path log_dir;
  /// Period of service-generated ticks for sessions started with auto_tick.
  Millis auto_tick_ms = 50;
  /// Monotonic milliseconds; drives auto ticks. Defaults to steady_clock.
  std::function<Millis()> clock;
  /// Session id when the client does not pick one.
  std::function<std::string(const Scenario&)> make_session_id;
};

/// State of one connection: at most one live session at a time. Protocol
/// violations produce an error message and leave the session untouched.
class ConnectionHandler {
 public:
  ConnectionHandler(std::shared_ptr<const ScenarioRegistry> registry, HandlerOptions options);
  ~ConnectionHandler();

  ConnectionHandler(const ConnectionHandler&) = delete;
  ConnectionHandler& operator=(const ConnectionHandler&) = delete;

  /// Parses one message (a WebSocket text frame or an NDJSON line).
  std::vector<json> handle_text(std::string_view text);
  std::vector<json> handle(const json& message);

  /// Ticks due since the last call for an auto-tick session, stamped on the
  /// session clock (milliseconds since start_session). Empty otherwise.
  std::vector<json> auto_tick();
  bool auto_tick_enabled() const;

  /// Ends the session (if any) and closes its log.
  void close();

  bool has_session() const { return session_ != nullptr; }
  std::optional<std::string> session_id() const;
  /// Log text of the current in-memory session log.
  std::string log_contents() const;

 private:
  struct Session;

  std::vector<json> on_hello(const json& msg, const json& id);
  std::vector<json> on_start(const json& msg, const json& id);
  std::vector<json> on_input(const json& msg, const json& id);
  std::vector<json> on_snapshot(const json& id);
  std::vector<json> on_end(const json& id);
  std::vector<json> apply(const InputEvent& ev, const json& id);

  std::shared_ptr<const ScenarioRegistry> registry_;
  HandlerOptions options_;
  bool greeted_ = false;
  std::set<std::string> seen_ids_;
  std::unique_ptr<Session> session_;
};

json error_message(ErrorCode code, const std::string& message, const json& msg_id);

}  // namespace rehearsal::service
