#include "rehearsal/session_log.hpp"

#include <fstream>
#include <sstream>

#include "rehearsal/errors.hpp"
#include "rehearsal/wire.hpp"

namespace rehearsal {

using nlohmann::json;

LogError::LogError(const std::string& message, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

LogRecord make_record(const std::string& session_id, const InputEvent& ev) {
  return LogRecord{ev.t_ms, session_id, std::string(kind_name(ev.payload)), wire::payload_json(ev.payload)};
}

LogRecord make_record(const std::string& session_id, const OutputEvent& ev) {
  return LogRecord{ev.t_ms, session_id, std::string(kind_name(ev.payload)), wire::payload_json(ev.payload)};
}

json to_json(const LogRecord& r) {
  return json{{"t_ms", r.t_ms}, {"session_id", r.session_id}, {"kind", r.kind}, {"payload", r.payload}};
}

LogRecord record_from_json(const json& j) {
  if (!j.is_object()) throw LogError("record must be a JSON object");
  if (j.size() != 4) throw LogError("record must have exactly t_ms, session_id, kind, payload");
  LogRecord r;
  const auto t = j.find("t_ms");
  const auto sid = j.find("session_id");
  const auto kind = j.find("kind");
  const auto payload = j.find("payload");
  if (t == j.end() || !t->is_number_integer()) throw LogError("t_ms must be an integer");
  if (sid == j.end() || !sid->is_string()) throw LogError("session_id must be a string");
  if (kind == j.end() || !kind->is_string() || kind->get<std::string>().empty()) {
    throw LogError("kind must be a non-empty string");
  }
  if (payload == j.end() || !payload->is_object()) throw LogError("payload must be an object");
  r.t_ms = t->get<Millis>();
  r.session_id = sid->get<std::string>();
  r.kind = kind->get<std::string>();
  r.payload = *payload;
  return r;
}

std::string to_line(const LogRecord& record) { return to_json(record).dump() + "\n"; }

std::string log_file_name(std::string_view session_id) { return std::string(session_id) + ".ndjson"; }

SessionLog SessionLog::open_file(const std::filesystem::path& path) {
  SessionLog log;
  auto file = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::app);
  if (!*file) throw IoError("cannot open log '" + path.string() + "' for append");
  log.out_ = std::move(file);
  log.path_ = path;
  return log;
}

SessionLog SessionLog::in_memory() {
  SessionLog log;
  log.out_ = std::make_unique<std::ostringstream>();
  log.memory_ = true;
  return log;
}

SessionLog::SessionLog(SessionLog&&) noexcept = default;
SessionLog& SessionLog::operator=(SessionLog&&) noexcept = default;
SessionLog::~SessionLog() {
  if (out_) out_->flush();
}

void SessionLog::append(const LogRecord& record) {
  auto it = last_t_.find(record.session_id);
  if (it != last_t_.end() && record.t_ms < it->second) {
    throw LogError("time regression for session \"" + record.session_id + "\": " + std::to_string(record.t_ms) +
                   " < " + std::to_string(it->second));
  }
  const auto line = to_line(record);
  out_->write(line.data(), static_cast<std::streamsize>(line.size()));
  out_->flush();
  if (!*out_) throw IoError("write to log '" + path_.string() + "' failed");
  last_t_[record.session_id] = record.t_ms;
  ++lines_;
}

void SessionLog::append_step(const std::string& session_id, const InputEvent& ev,
                             std::span<const OutputEvent> outputs) {
  std::size_t i = 0;
  for (; i < outputs.size() && outputs[i].t_ms < ev.t_ms; ++i) append(make_record(session_id, outputs[i]));
  append(make_record(session_id, ev));
  for (; i < outputs.size(); ++i) append(make_record(session_id, outputs[i]));
}

void SessionLog::append_outputs(const std::string& session_id, std::span<const OutputEvent> outputs) {
  for (const auto& ev : outputs) append(make_record(session_id, ev));
}

void SessionLog::flush() {
  if (out_) out_->flush();
}

std::string SessionLog::contents() const {
  if (!memory_) return {};
  return static_cast<const std::ostringstream&>(*out_).str();
}

std::vector<LogRecord> parse_log(std::string_view text) {
  std::vector<LogRecord> records;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw LogError("truncated line (no newline terminator)", line_no);
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    json j;
    try {
      j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      throw LogError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    try {
      records.push_back(record_from_json(j));
    } catch (const LogError& e) {
      throw LogError(e.what(), line_no);
    }
  }
  return records;
}

std::vector<LogRecord> read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open log '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_log(buffer.str());
}

AdherenceReport adherence_report(std::span<const LogRecord> records) {
  AdherenceReport report;
  if (records.empty()) return report;
  report.session_id = records.front().session_id;
  for (const auto& r : records) {
    if (r.session_id != report.session_id) {
      throw LogError("mixed session ids: \"" + report.session_id + "\" and \"" + r.session_id + "\"");
    }
    if (r.kind == "phase_entered") {
      report.phases_entered.push_back(r.payload.value("phase_id", ""));
    } else if (r.kind == "session_finished") {
      report.completed = true;
    } else if (r.kind == "selection" && r.payload.value("action", "") == "replay") {
      ++report.replay_count;
    } else if (r.kind == "breath_result") {
      try {
        report.breath_hold_results.push_back(wire::breath_result_from_json(r.payload));
      } catch (const wire::WireError& e) {
        throw LogError(std::string("bad breath_result payload: ") + e.what());
      }
    } else if (r.kind == "relaxation_extended") {
      ++report.adaptation_events;
    }
  }
  report.total_duration_ms = records.back().t_ms - records.front().t_ms;
  return report;
}

json to_json(const AdherenceReport& report) {
  json results = json::array();
  for (const auto& r : report.breath_hold_results) results.push_back(wire::to_json(r));
  return json{{"session_id", report.session_id},
              {"completed", report.completed},
              {"phases_entered", report.phases_entered},
              {"replay_count", report.replay_count},
              {"breath_hold_results", results},
              {"total_duration_ms", report.total_duration_ms},
              {"adaptation_events", report.adaptation_events}};
}

std::string to_text(const AdherenceReport& report) {
  std::ostringstream out;
  out << "session          " << report.session_id << "\n";
  out << "completed        " << (report.completed ? "yes" : "no") << "\n";
  out << "phases entered   " << report.phases_entered.size();
  for (std::size_t i = 0; i < report.phases_entered.size(); ++i) {
    out << (i == 0 ? " (" : " -> ") << report.phases_entered[i];
  }
  out << (report.phases_entered.empty() ? "" : ")") << "\n";
  out << "replays          " << report.replay_count << "\n";
  out << "breath holds     " << report.breath_hold_results.size() << "\n";
  for (const auto& r : report.breath_hold_results) {
    out << "  " << to_string(r.outcome) << " held " << r.held_ms << " ms\n";
  }
  out << "adaptations      " << report.adaptation_events << "\n";
  out << "duration         " << report.total_duration_ms << " ms\n";
  return out.str();
}

}  // namespace rehearsal
