#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rehearsal/engine.hpp"

namespace rehearsal {

/// One NDJSON line: {"kind":..,"payload":{..},"session_id":..,"t_ms":..}.
/// Input and output events share the log; their kind names are disjoint.
struct LogRecord {
  Millis t_ms = 0;
  std::string session_id;
  std::string kind;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

class LogError : public std::runtime_error {
 public:
  LogError(const std::string& message, std::size_t line = 0);
  /// 1-based line number for read errors, 0 otherwise.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

LogRecord make_record(const std::string& session_id, const InputEvent& ev);
LogRecord make_record(const std::string& session_id, const OutputEvent& ev);

nlohmann::json to_json(const LogRecord& record);
LogRecord record_from_json(const nlohmann::json& j);
std::string to_line(const LogRecord& record);

/// `<session_id>.ndjson`
std::string log_file_name(std::string_view session_id);

/// Append-only NDJSON writer. Every append is flushed before returning.
class SessionLog {
 public:
  /// Opens (creating if needed) a file for appending. Throws IoError.
  static SessionLog open_file(const std::filesystem::path& path);
  /// Keeps lines in memory; see contents().
  static SessionLog in_memory();

  SessionLog(SessionLog&&) noexcept;
  SessionLog& operator=(SessionLog&&) noexcept;
  ~SessionLog();

  /// Throws LogError on time regression within the record's session (and
  /// writes nothing), IoError when the write fails.
  void append(const LogRecord& record);

  /// Writes one engine step: outputs due before the input's timestamp, the
  /// input itself, then outputs at the input's timestamp. This keeps the
  /// file in non-decreasing time order.
  void append_step(const std::string& session_id, const InputEvent& ev, std::span<const OutputEvent> outputs);
  void append_outputs(const std::string& session_id, std::span<const OutputEvent> outputs);

  void flush();
  const std::filesystem::path& path() const { return path_; }
  std::size_t lines_written() const { return lines_; }
  /// Text written so far (in-memory logs only).
  std::string contents() const;

 private:
  SessionLog() = default;

  std::unique_ptr<std::ostream> out_;
  std::filesystem::path path_;
  std::map<std::string, Millis, std::less<>> last_t_;
  std::size_t lines_ = 0;
  bool memory_ = false;
};

/// Strict NDJSON read: every line must be a complete record ending in '\n'.
std::vector<LogRecord> read_log(const std::filesystem::path& path);
std::vector<LogRecord> parse_log(std::string_view text);

struct AdherenceReport {
  std::string session_id;
  bool completed = false;
  std::vector<std::string> phases_entered;
  int replay_count = 0;
  std::vector<BreathHoldResult> breath_hold_results;
  Millis total_duration_ms = 0;
  int adaptation_events = 0;
};

/// Computed from the records alone. Throws LogError on mixed session ids.
AdherenceReport adherence_report(std::span<const LogRecord> records);

nlohmann::json to_json(const AdherenceReport& report);
std::string to_text(const AdherenceReport& report);

}  // namespace rehearsal
