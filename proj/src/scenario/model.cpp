#include "rehearsal/scenario.hpp"

#include "rehearsal/overloaded.hpp"

#include <array>
#include <utility>

namespace rehearsal {

namespace {

constexpr std::array<std::pair<PhaseKind, std::string_view>, 5> kPhaseKindNames{{
    {PhaseKind::kTutorial, "tutorial"},
    {PhaseKind::kRelaxation, "relaxation"},
    {PhaseKind::kBreathHoldPractice, "breath_hold_practice"},
    {PhaseKind::kScan, "scan"},
    {PhaseKind::kDebrief, "debrief"},
}};

}  // namespace

std::string_view to_string(PhaseKind kind) {
  for (const auto& [k, name] : kPhaseKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<PhaseKind> phase_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kPhaseKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kMeanHrBpm: return "mean_hr_bpm";
    case Metric::kMinHrBpm: return "min_hr_bpm";
    case Metric::kMaxHrBpm: return "max_hr_bpm";
  }
  return "unknown";
}

std::string_view action_name(const TargetAction& action) {
  return std::visit(Overloaded{
                        [](const GotoAction&) { return std::string_view{"goto"}; },
                        [](const ReplayAction&) { return std::string_view{"replay"}; },
                        [](const FinishAction&) { return std::string_view{"finish"}; },
                        [](const PlayPromptAction&) { return std::string_view{"play_prompt"}; },
                    },
                    action);
}

std::string_view step_kind_name(const StepBody& body) {
  return std::visit(Overloaded{
                        [](const Prompt&) { return std::string_view{"prompt"}; },
                        [](const TimedWait&) { return std::string_view{"timed_wait"}; },
                        [](const BreathHoldSpec&) { return std::string_view{"breath_hold"}; },
                        [](const Choice&) { return std::string_view{"choice"}; },
                        [](const QAGroup&) { return std::string_view{"qa_group"}; },
                    },
                    body);
}

std::string_view to_string(IssueCode code) {
  switch (code) {
    case IssueCode::kDuplicateId: return "DUPLICATE_ID";
    case IssueCode::kDanglingTarget: return "DANGLING_TARGET";
    case IssueCode::kUnreachablePhase: return "UNREACHABLE_PHASE";
    case IssueCode::kActionOutsideDebrief: return "ACTION_OUTSIDE_DEBRIEF";
    case IssueCode::kAdaptationKindAbsent: return "ADAPTATION_KIND_ABSENT";
    case IssueCode::kUnsupportedMetric: return "UNSUPPORTED_METRIC";
    case IssueCode::kUnknownPrompt: return "UNKNOWN_PROMPT";
    case IssueCode::kZeroDurationPhase: return "ZERO_DURATION_PHASE";
  }
  return "UNKNOWN";
}

std::optional<std::size_t> Scenario::phase_index(std::string_view phase_id) const {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (phases[i].id == phase_id) return i;
  }
  return std::nullopt;
}

const Prompt* Scenario::find_prompt_step(std::string_view step_id) const {
  for (const auto& phase : phases) {
    for (const auto& step : phase.steps) {
      if (step.id != step_id) continue;
      if (const auto* prompt = std::get_if<Prompt>(&step.body)) return prompt;
    }
  }
  return nullptr;
}

ParseError::ParseError(Kind kind, std::string path, std::string message)
    : std::runtime_error((kind == Kind::kSyntax ? "syntax error " : "schema error at ") + path +
                         ": " + message),
      kind_(kind),
      path_(std::move(path)) {}

std::string ValidationReport::to_text() const {
  std::string out;
  for (const auto& e : errors) {
    out += "error   " + std::string(to_string(e.code)) + " " + e.path + ": " + e.message + "\n";
  }
  for (const auto& w : warnings) {
    out += "warning " + std::string(to_string(w.code)) + " " + w.path + ": " + w.message + "\n";
  }
  out += std::to_string(errors.size()) + " error(s), " + std::to_string(warnings.size()) +
         " warning(s)\n";
  return out;
}

namespace {

Millis scaled(Millis value, int factor) {
  Millis v = value / factor;
  return v < 1 ? 1 : v;
}

void scale_prompt(Prompt& prompt, int factor) { prompt.duration_ms = scaled(prompt.duration_ms, factor); }

}  // namespace

Scenario scale_scenario(const Scenario& scenario, int factor) {
  if (factor < 1) throw std::invalid_argument("scale factor must be >= 1");
  Scenario out = scenario;
  if (factor == 1) return out;
  out.dwell_threshold_ms = scaled(out.dwell_threshold_ms, factor);
  for (auto& rule : out.adaptation_rules) rule.extension_ms = scaled(rule.extension_ms, factor);
  for (auto& phase : out.phases) {
    for (auto& step : phase.steps) {
      std::visit(Overloaded{
                     [&](Prompt& p) { scale_prompt(p, factor); },
                     [&](TimedWait& w) { w.duration_ms = scaled(w.duration_ms, factor); },
                     [&](BreathHoldSpec& b) {
                       b.hold_ms = scaled(b.hold_ms, factor);
                       // grace may legitimately be zero
                       b.grace_ms = b.grace_ms / factor;
                       scale_prompt(b.fallback_prompt, factor);
                     },
                     [](Choice&) {},
                     [&](QAGroup& q) {
                       for (auto& item : q.items) scale_prompt(item.answer, factor);
                     },
                 },
                 step.body);
    }
  }
  return out;
}

Millis nominal_duration_ms(const Scenario& scenario) {
  Millis total = 0;
  for (const auto& phase : scenario.phases) {
    for (const auto& step : phase.steps) {
      total += std::visit(Overloaded{
                              [](const Prompt& p) { return p.duration_ms; },
                              [](const TimedWait& w) { return w.duration_ms; },
                              [](const BreathHoldSpec& b) { return b.hold_ms; },
                              [&](const Choice&) { return scenario.dwell_threshold_ms; },
                              [](const QAGroup&) { return Millis{0}; },
                          },
                          step.body);
    }
  }
  return total;
}

}  // namespace rehearsal
