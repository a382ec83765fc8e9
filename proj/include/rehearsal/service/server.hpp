#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>

#include "rehearsal/service/protocol.hpp"

// Network front end of the session service: WebSocket text frames (default)
// or raw TCP with one JSON message per line, one session per connection.

namespace rehearsal::service {

enum class Transport { kWebSocket, kTcpNdjson };

struct ServerConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 8787;  // 0 picks a free port
  std::filesystem::path scenario_dir = "assets/scenarios";
  std::filesystem::path log_dir = "logs";
  Transport transport = Transport::kWebSocket;
  /// Service tick rate for sessions started with auto_tick.
  int auto_tick_hz = 20;
};

/// Bind failures and unusable directories.
class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses "host:port", "host" or ":port" over the given defaults.
void apply_bind(ServerConfig& config, const std::string& bind);

class Server {
 public:
  /// Loads the scenarios and binds. Throws ServiceError or IoError.
  explicit Server(ServerConfig config);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;
  const ScenarioRegistry& scenarios() const;

  /// Serves until stop() (or SIGINT/SIGTERM when handle_signals is set).
  void run(bool handle_signals = false);
  /// Thread-safe. Closes the listener and every connection; each open
  /// session's log is flushed and closed before run() returns.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rehearsal::service
