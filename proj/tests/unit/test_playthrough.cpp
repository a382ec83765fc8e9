#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "rehearsal/errors.hpp"
#include "rehearsal/playthrough.hpp"
#include "rehearsal/session_log.hpp"

using namespace rehearsal;
using namespace rehearsal::playthrough;
using namespace testutil;

namespace {

ScenarioPtr fast() { return share(load_scenario_file(asset("ct_fast.json").string())); }
ScenarioPtr full() { return share(load_scenario_file(asset("ct_default.json").string())); }

RunResult run(const ScenarioPtr& s, Preset p, RunOptions options = {}, SessionLog* log = nullptr) {
  return run_preset(s, p, options, log);
}

std::vector<std::string> expected_phases() {
  return {"tutorial", "relaxation", "breath_hold_practice", "scan", "debrief"};
}

template <class T>
std::vector<T> outputs_of(const RunResult& r) {
  return events_of<T>(r.outputs);
}

}  // namespace

TEST_SUITE("playthrough.presets") {
  TEST_CASE("compliant on ct_fast completes with two successful holds") {
    const auto r = run(fast(), Preset::kCompliant);
    CHECK(r.completed);
    CHECK(r.phases_entered() == expected_phases());
    const auto results = r.breath_results();
    REQUIRE(results.size() == 2);
    for (const auto& b : results) CHECK(b == BreathHoldResult{BreathOutcome::kSuccess, 1000});
    CHECK(r.summary().rfind("completed=true phases=5 breath=[success 1000, success 1000]", 0) == 0);
  }

  TEST_CASE("compliant on the full scenario holds for the whole ten seconds") {
    const auto r = run(full(), Preset::kCompliant);
    CHECK(r.completed);
    for (const auto& b : r.breath_results()) {
      CHECK(b.outcome == BreathOutcome::kSuccess);
      CHECK(b.held_ms >= 10000);
    }
    // One tick of reaction per hold and for the final gaze.
    CHECK(r.end_ms == nominal_duration_ms(*full()) + 3 * 50);
  }

  TEST_CASE("early_release lets go at 60% of the practice hold and hears the fallback") {
    const auto s = fast();
    const auto r = run(s, Preset::kEarlyRelease);
    CHECK(r.completed);
    const auto results = r.breath_results();
    REQUIRE(results.size() == 2);
    CHECK(results[0] == BreathHoldResult{BreathOutcome::kEarlyRelease, 600});
    CHECK(results[1].outcome == BreathOutcome::kSuccess);
    const auto commands = outputs_of<output::BreathCommand>(r);
    REQUIRE(commands.size() == 2);
    CHECK(commands[0].hold_ms == commands[1].hold_ms);
    const auto& practice = s->phases[*s->phase_index("breath_hold_practice")];
    const auto* spec = std::get_if<BreathHoldSpec>(&practice.steps.back().body);
    bool fallback_found = false;
    for (const auto& p : outputs_of<output::PromptShown>(r)) {
      for (const auto& step : practice.steps) {
        if (const auto* b = std::get_if<BreathHoldSpec>(&step.body)) fallback_found |= p.text == b->fallback_prompt.text;
      }
    }
    (void)spec;
    CHECK(fallback_found);
  }

  TEST_CASE("distracted breaks off the first look at 75% and still finishes") {
    const auto s = fast();
    const auto compliant = run(s, Preset::kCompliant);
    const auto r = run(s, Preset::kDistracted);
    CHECK(r.completed);
    CHECK(outputs_of<output::Selection>(r).size() == 1);
    double peak_before_reset = 0.0;
    bool reset_seen = false;
    for (const auto& d : outputs_of<output::DwellProgress>(r)) {
      if (reset_seen) break;
      if (d.fraction == 0.0 && peak_before_reset > 0.0) reset_seen = true;
      peak_before_reset = std::max(peak_before_reset, d.fraction);
    }
    CHECK(reset_seen);
    CHECK(peak_before_reset == doctest::Approx(0.75));
    CHECK(r.end_ms > compliant.end_ms);
  }

  TEST_CASE("speed factor shrinks the run") {
    RunOptions options;
    options.speed = 10;
    const auto r = run(full(), Preset::kCompliant, options);
    CHECK(r.completed);
    for (const auto& b : r.breath_results()) CHECK(b == BreathHoldResult{BreathOutcome::kSuccess, 1000});
    CHECK(r.end_ms < nominal_duration_ms(*full()) / 9);
  }

  TEST_CASE("same command twice gives byte-identical logs") {
    for (auto preset : kAllPresets) {
      RunOptions options;
      options.seed = 12;
      options.profile = PatientProfile::calm();
      auto a = SessionLog::in_memory();
      auto b = SessionLog::in_memory();
      run(fast(), preset, options, &a);
      run(fast(), preset, options, &b);
      CHECK(a.contents() == b.contents());
      CHECK(a.lines_written() > 0);
    }
  }

  TEST_CASE("anxious profile triggers the relaxation extension") {
    RunOptions options;
    options.profile = PatientProfile::anxious_noise_free();
    const auto r = run(full(), Preset::kCompliant, options);
    CHECK(r.completed);
    CHECK(outputs_of<output::RelaxationExtended>(r).size() >= 1);
    options.profile = PatientProfile::calm();
    CHECK(outputs_of<output::RelaxationExtended>(run(full(), Preset::kCompliant, options)).empty());
  }

  TEST_CASE("run then report works for every preset") {
    for (auto preset : kAllPresets) {
      auto log = SessionLog::in_memory();
      RunOptions options;
      options.session_id = std::string(to_string(preset));
      run(fast(), preset, options, &log);
      const auto report = adherence_report(parse_log(log.contents()));
      CHECK(report.completed);
      CHECK(report.phases_entered == expected_phases());
      CHECK(report.breath_hold_results.size() == 2);
      CHECK(report.session_id == to_string(preset));
    }
  }

  TEST_CASE("preset names") {
    for (auto p : kAllPresets) CHECK(preset_from_string(to_string(p)) == p);
    CHECK_FALSE(preset_from_string("sleepy"));
  }
}

TEST_SUITE("playthrough.trace") {
  TEST_CASE("replaying a preset's recorded inputs reproduces its outputs") {
    for (auto preset : kAllPresets) {
      const auto original = run(fast(), preset);
      PatientTrace trace{original.inputs, std::nullopt};
      const auto replay = run_trace(fast(), trace, {});
      CHECK(replay.outputs == original.outputs);
      CHECK(replay.completed);
    }
  }

  TEST_CASE("NDJSON round trip with a profile line") {
    PatientTrace trace;
    trace.profile = PatientProfile::anxious_noise_free();
    trace.inputs = {tick(0), gaze_enter(10, "finish"), sensor(20, 88.5), hold_start(30), release(40), gaze_exit(50, "finish")};
    std::stringstream ss;
    write_trace(ss, trace);
    CHECK(parse_trace(ss.str()) == trace);
  }

  TEST_CASE("profile by name with overrides") {
    const auto t = parse_trace("{\"kind\":\"profile\",\"name\":\"anxious\",\"baseline_hr_bpm\":65}\n");
    REQUIRE(t.profile);
    CHECK(t.profile->anxiety_level == 1.0);
    CHECK(t.profile->baseline_hr_bpm == 65.0);
  }

  TEST_CASE("malformed traces") {
    CHECK_THROWS_AS(parse_trace("{\"t_ms\":5,\"kind\":\"tick\"}\n{\"t_ms\":4,\"kind\":\"tick\"}\n"), TraceError);
    CHECK_THROWS_AS(parse_trace("{\"t_ms\":5,\"kind\":\"wave\"}\n"), TraceError);
    CHECK_THROWS_AS(parse_trace("not json\n"), TraceError);
    CHECK_THROWS_AS(parse_trace("{\"kind\":\"profile\",\"name\":\"sleepy\"}\n"), TraceError);
    CHECK_THROWS_AS(parse_trace("{\"kind\":\"profile\",\"mood\":3}\n"), TraceError);
    CHECK_THROWS_AS(load_trace_file("/nonexistent/trace.ndjson"), IoError);
    try {
      parse_trace("{\"t_ms\":0,\"kind\":\"tick\"}\n\n{\"t_ms\":1}\n");
      FAIL("expected an error");
    } catch (const TraceError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("trace that does not fit the scenario") {
    PatientTrace unknown{{gaze_enter(100, "exit_door")}, std::nullopt};
    CHECK_THROWS_AS(run_trace(fast(), unknown, {}), TraceError);

    auto recorded = run(fast(), Preset::kCompliant).inputs;
    recorded.push_back(tick(recorded.back().t_ms + 10000));
    PatientTrace too_long{recorded, std::nullopt};
    CHECK_THROWS_AS(run_trace(fast(), too_long, {}), TraceError);
    RunOptions lenient;
    lenient.ignore_after_finish = true;
    CHECK(run_trace(fast(), too_long, lenient).completed);
  }

  TEST_CASE("an idle trace times out without finishing") {
    RunOptions options;
    options.max_duration_ms = 30000;
    const auto r = run_trace(fast(), PatientTrace{}, options);
    CHECK_FALSE(r.completed);
    CHECK(r.end_ms <= 30000);
  }

  TEST_CASE("trace timestamps follow the speed factor") {
    const auto original = run(full(), Preset::kCompliant);
    PatientTrace trace{original.inputs, std::nullopt};
    RunOptions options;
    options.speed = 10;
    const auto r = run_trace(full(), trace, options);
    CHECK(r.completed);
    CHECK(r.breath_results().size() == 2);
  }
}

TEST_SUITE("playthrough.random") {
  TEST_CASE("random traces are seed-stable and monotone") {
    const auto s = *fast();
    const auto a = random_trace(s, 4, 300);
    CHECK(a == random_trace(s, 4, 300));
    CHECK(a != random_trace(s, 5, 300));
    for (std::size_t i = 1; i < a.inputs.size(); ++i) CHECK(a.inputs[i - 1].t_ms <= a.inputs[i].t_ms);
  }

  TEST_CASE("parallel batch equals the serial batch") {
    const auto s = fast();
    const auto serial = batch_random_runs_serial(s, 100, 12, 400);
    const auto parallel = batch_random_runs_parallel(s, 100, 12, 400);
    CHECK(serial == parallel);
    CHECK(serial[0] != serial[1]);
    for (const auto& body : serial) CHECK_NOTHROW(parse_log(body));
  }
}
