#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "rehearsal/analytics/cohort.hpp"
#include "rehearsal/analytics/stats.hpp"
#include "rehearsal/errors.hpp"
#include "rehearsal/playthrough.hpp"
#include "rehearsal/scenario.hpp"
#include "rehearsal/service/server.hpp"
#include "rehearsal/session_log.hpp"

namespace rehearsal::cli {

namespace {

using nlohmann::json;

struct ValidateArgs {
  std::string path;
};

struct RunArgs {
  std::string scenario;
  std::string trace;
  std::string preset;
  std::uint64_t seed = 0;
  std::string out;
  int speed = 1;
  std::string profile;
  std::string session_id;
};

struct ReportArgs {
  std::string log;
  std::string format = "text";
};

struct SimulateArgs {
  int n_per_arm = 25;
  std::uint64_t seed = 0;
  std::string out;
  std::string params;
};

struct AnalyzeArgs {
  std::string csv;
  std::string format = "text";
  std::string fisher = "one";
  double threshold = 40.0;
};

struct ServeArgs {
  std::string bind = "127.0.0.1:8787";
  std::string scenarios = "assets/scenarios";
  std::string logs = "logs";
  int auto_tick_hz = 20;
  bool tcp = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to `path`, or to `out` when the path is empty or "-".
void write_output(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(out);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  body(file);
  file.flush();
  if (!file) throw IoError("write to '" + path + "' failed");
}

int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  try {
    scenario = load_scenario_file(a.path);
  } catch (const ParseError& e) {
    err << a.path << ": " << e.path() << ": " << e.what() << "\n";
    return kExitDomain;
  }
  const auto report = validate_scenario(scenario);
  for (const auto& issue : report.errors) {
    out << "error " << to_string(issue.code) << " " << issue.path << ": " << issue.message << "\n";
  }
  for (const auto& issue : report.warnings) {
    out << "warning " << to_string(issue.code) << " " << issue.path << ": " << issue.message << "\n";
  }
  out << a.path << ": " << (report.ok() ? "ok" : "invalid") << " (" << report.errors.size() << " errors, "
      << report.warnings.size() << " warnings)\n";
  return report.ok() ? kExitOk : kExitDomain;
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  Scenario parsed;
  try {
    parsed = load_scenario_file(a.scenario);
  } catch (const ParseError& e) {
    err << a.scenario << ": " << e.path() << ": " << e.what() << "\n";
    return kExitDomain;
  }
  const auto report = validate_scenario(parsed);
  if (!report.ok()) {
    err << a.scenario << " is not a valid scenario:\n" << report.to_text();
    return kExitDomain;
  }
  const auto scenario = std::make_shared<const Scenario>(std::move(parsed));

  playthrough::RunOptions options;
  options.seed = a.seed;
  options.speed = a.speed;
  if (!a.profile.empty()) options.profile = playthrough::profile_from_name(a.profile);

  std::optional<playthrough::Preset> preset;
  playthrough::PatientTrace trace;
  if (!a.preset.empty()) {
    preset = playthrough::preset_from_string(a.preset);
  } else {
    trace = playthrough::load_trace_file(a.trace);
  }
  options.session_id = !a.session_id.empty() ? a.session_id
                       : preset             ? scenario->id + "-" + a.preset + "-" + std::to_string(a.seed)
                                            : scenario->id + "-trace-" + std::to_string(a.seed);

  std::optional<SessionLog> log;
  if (!a.out.empty()) {
    std::error_code ec;
    std::filesystem::remove(a.out, ec);  // a rerun replaces the previous log
    log = SessionLog::open_file(a.out);
  }
  const auto result = preset ? playthrough::run_preset(scenario, *preset, options, log ? &*log : nullptr)
                             : playthrough::run_trace(scenario, trace, options, log ? &*log : nullptr);
  if (log) log->flush();
  out << result.summary() << "\n";
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto report = adherence_report(read_log(a.log));
  if (a.format == "json") {
    out << to_json(report).dump(2) << "\n";
  } else {
    out << to_text(report);
  }
  return kExitOk;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto spec = a.params.empty() ? analytics::default_cohort_spec(a.n_per_arm)
                                     : analytics::cohort_spec_from_json(json::parse(read_file(a.params)), a.n_per_arm);
  spec.check();
  const auto rows = analytics::simulate_cohort(spec, a.seed);
  write_output(a.out, out, [&](std::ostream& o) { analytics::write_cohort_csv(o, rows); });
  return kExitOk;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto rows = analytics::read_cohort_csv_file(a.csv);
  const auto sided = a.fisher == "two" ? analytics::Sidedness::kTwo : analytics::Sidedness::kOne;
  const auto report = analytics::cohort_report(rows, sided, a.threshold);
  if (a.format == "json") {
    out << to_json(report).dump(2) << "\n";
  } else {
    out << to_text(report);
  }
  return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  service::ServerConfig config;
  service::apply_bind(config, a.bind);
  config.scenario_dir = a.scenarios;
  config.log_dir = a.logs;
  config.auto_tick_hz = a.auto_tick_hz;
  config.transport = a.tcp ? service::Transport::kTcpNdjson : service::Transport::kWebSocket;
  service::Server server(config);
  out << "listening on " << config.bind_address << ":" << server.port() << " ("
      << (a.tcp ? "tcp-ndjson" : "websocket") << "), scenarios: ";
  const auto ids = server.scenarios().ids();
  for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? ", " : "") << ids[i];
  out << std::endl;
  server.run(/*handle_signals=*/true);
  out << "stopped" << std::endl;
  return kExitOk;
}

/// Runs a command, mapping exceptions onto the shared exit codes.
int guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const service::ServiceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::parse_error& e) {
    err << "error: invalid JSON: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

std::string joined(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : "|") + n;
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Guided CT-rehearsal engine: scenarios, playthroughs, reports, cohort statistics and live sessions",
               "rehearsal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rehearsal 1.0.0");

  std::function<int()> command;

  ValidateArgs validate;
  auto* v = app.add_subcommand("validate", "Check a scenario file; exit 1 when it has errors");
  v->add_option("scenario", validate.path, "Scenario JSON file")->required();
  v->callback([&] { command = [&] { return cmd_validate(validate, out, err); }; });

  std::vector<std::string> preset_names;
  for (auto p : playthrough::kAllPresets) preset_names.emplace_back(playthrough::to_string(p));
  RunArgs run_args;
  auto* r = app.add_subcommand("run", "Play a scenario headlessly with a trace or a behaviour preset");
  r->add_option("scenario", run_args.scenario, "Scenario JSON file")->required();
  auto* trace_opt = r->add_option("--trace", run_args.trace, "Patient trace (NDJSON input events)");
  auto* preset_opt = r->add_option("--preset", run_args.preset, "Behaviour preset")
                         ->check(CLI::IsMember(preset_names))
                         ->description("Behaviour preset: " + joined(preset_names));
  trace_opt->excludes(preset_opt);
  r->add_option("--seed", run_args.seed, "Seed for generated sensor noise")->capture_default_str();
  r->add_option("--out", run_args.out, "Write the session log here (replaced if present)");
  r->add_option("--speed", run_args.speed, "Divide every duration and trace timestamp by this factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  r->add_option("--profile", run_args.profile, "Generate sensor samples from a patient profile")
      ->check(CLI::IsMember({"calm", "anxious"}));
  r->add_option("--session-id", run_args.session_id, "Session id recorded in the log");
  r->callback([&] {
    if (run_args.trace.empty() && run_args.preset.empty()) throw CLI::RequiredError("--trace or --preset");
    command = [&] { return cmd_run(run_args, out, err); };
  });

  ReportArgs report;
  auto* rep = app.add_subcommand("report", "Adherence report from a session log");
  rep->add_option("log", report.log, "Session log (NDJSON)")->required();
  rep->add_option("--format", report.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  rep->callback([&] { command = [&] { return cmd_report(report, out); }; });

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate-cohort", "Write a seeded synthetic two-arm cohort as CSV");
  s->add_option("--n-per-arm", sim.n_per_arm, "Participants per arm")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--out", sim.out, "CSV output file (default: stdout)");
  s->add_option("--params", sim.params, "JSON file overriding arm parameters");
  s->callback([&] { command = [&] { return cmd_simulate(sim, out); }; });

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Statistical report for a cohort CSV");
  an->add_option("cohort", analyze.csv, "Cohort CSV")->required();
  an->add_option("--format", analyze.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  an->add_option("--fisher", analyze.fisher, "Sidedness of the Fisher exact test")
      ->check(CLI::IsMember({"one", "two"}))
      ->capture_default_str();
  an->add_option("--threshold", analyze.threshold, "Pre-scan STAI score counted as low anxiety below this")
      ->capture_default_str();
  an->callback([&] { command = [&] { return cmd_analyze(analyze, out); }; });

  ServeArgs serve;
  auto* sv = app.add_subcommand("serve", "Run the live session service until SIGINT/SIGTERM");
  sv->add_option("--bind", serve.bind, "host:port to listen on (port 0 picks a free one)")
      ->envname("REHEARSAL_BIND")
      ->capture_default_str();
  sv->add_option("--scenarios", serve.scenarios, "Directory of scenario JSON files")
      ->envname("REHEARSAL_SCENARIOS")
      ->capture_default_str();
  sv->add_option("--logs", serve.logs, "Directory for session logs")->envname("REHEARSAL_LOGS")->capture_default_str();
  sv->add_option("--auto-tick-hz", serve.auto_tick_hz, "Tick rate for auto_tick sessions")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  sv->add_flag("--tcp", serve.tcp, "Raw TCP with one JSON message per line instead of WebSocket");
  sv->callback([&] { command = [&] { return cmd_serve(serve, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  return guarded(command, err);
}

}  // namespace rehearsal::cli
