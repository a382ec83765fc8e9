#include <map>
#include <set>
#include <vector>

#include "rehearsal/overloaded.hpp"
#include "rehearsal/scenario.hpp"

namespace rehearsal {

namespace {

std::string phase_path(std::size_t i) { return "$.phases[" + std::to_string(i) + "]"; }
std::string step_path(std::size_t i, std::size_t k) {
  return phase_path(i) + ".steps[" + std::to_string(k) + "]";
}

bool resolves(const Scenario& s, const std::string& target) {
  return target == kEndMarker || s.phase_index(target).has_value();
}

// Phases directly reachable from phase `i` by completion or gaze actions.
std::vector<std::size_t> successors(const Scenario& s, std::size_t i) {
  std::vector<std::size_t> out;
  const auto& phase = s.phases[i];
  if (auto idx = s.phase_index(phase.on_complete)) out.push_back(*idx);
  for (const auto& step : phase.steps) {
    const auto* choice = std::get_if<Choice>(&step.body);
    if (choice == nullptr) continue;
    for (const auto& t : choice->targets) {
      if (const auto* g = std::get_if<GotoAction>(&t.action)) {
        if (auto idx = s.phase_index(g->phase_id)) out.push_back(*idx);
      } else if (std::holds_alternative<ReplayAction>(t.action)) {
        out.push_back(0);
      }
    }
  }
  return out;
}

}  // namespace

ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport report;
  auto error = [&](std::string path, IssueCode code, std::string message) {
    report.errors.push_back({std::move(path), code, std::move(message)});
  };

  std::map<std::string, std::size_t> phase_ids;
  for (std::size_t i = 0; i < s.phases.size(); ++i) {
    const auto& phase = s.phases[i];
    if (auto [it, inserted] = phase_ids.emplace(phase.id, i); !inserted) {
      error(phase_path(i) + ".id", IssueCode::kDuplicateId,
            "phase id \"" + phase.id + "\" already used by " + phase_path(it->second));
    }
  }

  for (std::size_t i = 0; i < s.phases.size(); ++i) {
    const auto& phase = s.phases[i];
    const auto ppath = phase_path(i);

    if (!resolves(s, phase.on_complete)) {
      error(ppath + ".on_complete", IssueCode::kDanglingTarget,
            "transition target \"" + phase.on_complete + "\" is not a phase id or END");
    }

    // Step ids, choice target ids and Q&A labels share one namespace per
    // phase, since optional Q&A items stay gazeable alongside later choices.
    std::set<std::string> step_ids;
    std::set<std::string> gaze_ids;
    Millis timed_total = 0;
    for (std::size_t k = 0; k < phase.steps.size(); ++k) {
      const auto& step = phase.steps[k];
      const auto spath = step_path(i, k);
      if (!step_ids.insert(step.id).second) {
        error(spath + ".id", IssueCode::kDuplicateId, "step id \"" + step.id + "\" repeated within phase");
      }
      std::visit(
          Overloaded{
              [&](const Prompt& p) { timed_total += p.duration_ms; },
              [&](const TimedWait& w) { timed_total += w.duration_ms; },
              [&](const BreathHoldSpec& b) { timed_total += b.hold_ms; },
              [&](const Choice& c) {
                timed_total += s.dwell_threshold_ms;  // a selection takes at least one dwell
                for (std::size_t t = 0; t < c.targets.size(); ++t) {
                  const auto& target = c.targets[t];
                  const auto tpath = spath + ".choice.targets[" + std::to_string(t) + "]";
                  if (!gaze_ids.insert(target.id).second) {
                    error(tpath + ".id", IssueCode::kDuplicateId,
                          "gaze target id \"" + target.id + "\" repeated within phase");
                  }
                  const bool terminal_action = std::holds_alternative<ReplayAction>(target.action) ||
                                               std::holds_alternative<FinishAction>(target.action);
                  if (terminal_action && phase.kind != PhaseKind::kDebrief) {
                    error(tpath + ".action", IssueCode::kActionOutsideDebrief,
                          std::string(action_name(target.action)) + " is only allowed in debrief phases");
                  }
                  if (const auto* g = std::get_if<GotoAction>(&target.action); g && !s.phase_index(g->phase_id)) {
                    error(tpath + ".action.phase", IssueCode::kDanglingTarget,
                          "goto target \"" + g->phase_id + "\" is not a phase id");
                  }
                  if (const auto* pp = std::get_if<PlayPromptAction>(&target.action);
                      pp && s.find_prompt_step(pp->prompt_step_id) == nullptr) {
                    error(tpath + ".action.prompt", IssueCode::kUnknownPrompt,
                          "no prompt step with id \"" + pp->prompt_step_id + "\"");
                  }
                }
              },
              [&](const QAGroup& q) {
                if (!q.optional) timed_total += s.dwell_threshold_ms;
                for (std::size_t t = 0; t < q.items.size(); ++t) {
                  const auto& label = q.items[t].question_label;
                  if (!gaze_ids.insert(label).second) {
                    error(spath + ".qa_group.items[" + std::to_string(t) + "].question_label",
                          IssueCode::kDuplicateId, "question label \"" + label + "\" repeated within phase");
                  }
                }
              },
          },
          step.body);
    }
    if (timed_total == 0) {
      report.warnings.push_back({ppath, IssueCode::kZeroDurationPhase,
                                 "phase \"" + phase.id + "\" takes no time (only optional Q&A)"});
    }
  }

  // Reachability from the first phase.
  if (!s.phases.empty()) {
    std::vector<bool> seen(s.phases.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      auto i = stack.back();
      stack.pop_back();
      for (auto next : successors(s, i)) {
        if (!seen[next]) {
          seen[next] = true;
          stack.push_back(next);
        }
      }
    }
    for (std::size_t i = 0; i < s.phases.size(); ++i) {
      if (!seen[i]) {
        error(phase_path(i), IssueCode::kUnreachablePhase,
              "phase \"" + s.phases[i].id + "\" is not reachable from \"" + s.phases[0].id + "\"");
      }
    }
  }

  for (std::size_t r = 0; r < s.adaptation_rules.size(); ++r) {
    const auto& rule = s.adaptation_rules[r];
    const auto rpath = "$.adaptation_rules[" + std::to_string(r) + "]";
    bool kind_present = false;
    for (const auto& phase : s.phases) kind_present = kind_present || phase.kind == rule.phase_kind;
    if (!kind_present) {
      error(rpath + ".phase_kind", IssueCode::kAdaptationKindAbsent,
            "no phase of kind " + std::string(to_string(rule.phase_kind)));
    }
    if (rule.metric != Metric::kMeanHrBpm) {
      error(rpath + ".metric", IssueCode::kUnsupportedMetric,
            "metric " + std::string(to_string(rule.metric)) + " is not supported for adaptation");
    }
  }

  return report;
}

}  // namespace rehearsal
