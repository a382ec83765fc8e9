#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "rehearsal/errors.hpp"
#include "rehearsal/overloaded.hpp"
#include "rehearsal/scenario.hpp"

namespace rehearsal {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& message) {
  throw ParseError(ParseError::Kind::kSchema, path, message);
}

std::string type_name(const json& j) { return j.type_name(); }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected object, got " + type_name(j));
}

void expect_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) schema_error(path + "." + key, "unknown field");
  }
}

const json* field(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& required(const json& obj, const char* key, const std::string& path) {
  const json* value = field(obj, key);
  if (value == nullptr) schema_error(path + "." + key, "missing required field");
  return *value;
}

std::string as_string(const json& j, const std::string& path, bool non_empty = true) {
  if (!j.is_string()) schema_error(path, "expected string, got " + type_name(j));
  auto s = j.get<std::string>();
  if (non_empty && s.empty()) schema_error(path, "expected non-empty string");
  return s;
}

Millis as_int(const json& j, const std::string& path, Millis minimum, const char* expected) {
  if (!j.is_number_integer()) schema_error(path, std::string("expected ") + expected + ", got " + type_name(j));
  if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    schema_error(path, "integer out of range");
  }
  Millis v = j.get<Millis>();
  if (v < minimum) schema_error(path, std::string("expected ") + expected + ", got " + std::to_string(v));
  return v;
}

Millis positive_int(const json& j, const std::string& path) { return as_int(j, path, 1, "positive integer"); }
Millis non_negative_int(const json& j, const std::string& path) {
  return as_int(j, path, 0, "non-negative integer");
}

double positive_real(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected positive number, got " + type_name(j));
  double v = j.get<double>();
  if (!(v > 0.0)) schema_error(path, "expected positive number");
  return v;
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) schema_error(path, "expected boolean, got " + type_name(j));
  return j.get<bool>();
}

const json& non_empty_array(const json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected array, got " + type_name(j));
  if (j.empty()) schema_error(path, "expected non-empty array");
  return j;
}

Prompt parse_prompt(const json& j, const std::string& path) {
  expect_object(j, path);
  expect_keys(j, path, {"text", "duration_ms"});
  Prompt p;
  p.text = as_string(required(j, "text", path), path + ".text");
  p.duration_ms = positive_int(required(j, "duration_ms", path), path + ".duration_ms");
  return p;
}

TimedWait parse_timed_wait(const json& j, const std::string& path) {
  expect_object(j, path);
  expect_keys(j, path, {"duration_ms", "cue"});
  TimedWait w;
  w.duration_ms = positive_int(required(j, "duration_ms", path), path + ".duration_ms");
  if (const auto* cue = field(j, "cue")) w.cue = as_string(*cue, path + ".cue", false);
  return w;
}

BreathHoldSpec parse_breath_hold(const json& j, const std::string& path) {
  expect_object(j, path);
  expect_keys(j, path, {"hold_ms", "grace_ms", "fallback_prompt"});
  BreathHoldSpec b;
  if (const auto* v = field(j, "hold_ms")) b.hold_ms = positive_int(*v, path + ".hold_ms");
  if (const auto* v = field(j, "grace_ms")) b.grace_ms = non_negative_int(*v, path + ".grace_ms");
  b.fallback_prompt = parse_prompt(required(j, "fallback_prompt", path), path + ".fallback_prompt");
  return b;
}

TargetAction parse_action(const json& j, const std::string& path) {
  expect_object(j, path);
  auto type = as_string(required(j, "type", path), path + ".type");
  if (type == "goto") {
    expect_keys(j, path, {"type", "phase"});
    return GotoAction{as_string(required(j, "phase", path), path + ".phase")};
  }
  if (type == "play_prompt") {
    expect_keys(j, path, {"type", "prompt"});
    return PlayPromptAction{as_string(required(j, "prompt", path), path + ".prompt")};
  }
  if (type == "replay") {
    expect_keys(j, path, {"type"});
    return ReplayAction{};
  }
  if (type == "finish") {
    expect_keys(j, path, {"type"});
    return FinishAction{};
  }
  schema_error(path + ".type", "expected one of goto|replay|finish|play_prompt, got \"" + type + "\"");
}

Choice parse_choice(const json& j, const std::string& path) {
  expect_object(j, path);
  expect_keys(j, path, {"targets"});
  Choice c;
  const auto tpath = path + ".targets";
  const auto& targets = non_empty_array(required(j, "targets", path), tpath);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto p = tpath + "[" + std::to_string(i) + "]";
    const auto& t = targets[i];
    expect_object(t, p);
    expect_keys(t, p, {"id", "label", "action"});
    GazeTarget target;
    target.id = as_string(required(t, "id", p), p + ".id");
    target.label = as_string(required(t, "label", p), p + ".label");
    target.action = parse_action(required(t, "action", p), p + ".action");
    c.targets.push_back(std::move(target));
  }
  return c;
}

QAGroup parse_qa_group(const json& j, const std::string& path) {
  expect_object(j, path);
  expect_keys(j, path, {"items", "optional"});
  QAGroup q;
  if (const auto* v = field(j, "optional")) q.optional = as_bool(*v, path + ".optional");
  const auto ipath = path + ".items";
  const auto& items = non_empty_array(required(j, "items", path), ipath);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto p = ipath + "[" + std::to_string(i) + "]";
    expect_object(items[i], p);
    expect_keys(items[i], p, {"question_label", "answer"});
    QAItem item;
    item.question_label = as_string(required(items[i], "question_label", p), p + ".question_label");
    item.answer = parse_prompt(required(items[i], "answer", p), p + ".answer");
    q.items.push_back(std::move(item));
  }
  return q;
}

Step parse_step(const json& j, const std::string& path) {
  expect_object(j, path);
  expect_keys(j, path, {"id", "prompt", "timed_wait", "breath_hold", "choice", "qa_group"});
  Step step;
  step.id = as_string(required(j, "id", path), path + ".id");
  int bodies = 0;
  for (const char* key : {"prompt", "timed_wait", "breath_hold", "choice", "qa_group"}) {
    bodies += field(j, key) != nullptr ? 1 : 0;
  }
  if (bodies != 1) {
    schema_error(path, "expected exactly one of prompt|timed_wait|breath_hold|choice|qa_group");
  }
  if (const auto* b = field(j, "prompt")) step.body = parse_prompt(*b, path + ".prompt");
  if (const auto* b = field(j, "timed_wait")) step.body = parse_timed_wait(*b, path + ".timed_wait");
  if (const auto* b = field(j, "breath_hold")) step.body = parse_breath_hold(*b, path + ".breath_hold");
  if (const auto* b = field(j, "choice")) step.body = parse_choice(*b, path + ".choice");
  if (const auto* b = field(j, "qa_group")) step.body = parse_qa_group(*b, path + ".qa_group");
  return step;
}

PhaseKind parse_kind(const json& j, const std::string& path) {
  auto name = as_string(j, path);
  auto kind = phase_kind_from_string(name);
  if (!kind) schema_error(path, "expected phase kind, got \"" + name + "\"");
  return *kind;
}

AdaptationRule parse_rule(const json& j, const std::string& path) {
  expect_object(j, path);
  expect_keys(j, path, {"phase_kind", "metric", "threshold", "extension_ms", "max_applications"});
  AdaptationRule rule;
  rule.phase_kind = parse_kind(required(j, "phase_kind", path), path + ".phase_kind");
  if (const auto* v = field(j, "metric")) {
    auto name = as_string(*v, path + ".metric");
    if (name == "mean_hr_bpm") {
      rule.metric = Metric::kMeanHrBpm;
    } else if (name == "min_hr_bpm") {
      rule.metric = Metric::kMinHrBpm;
    } else if (name == "max_hr_bpm") {
      rule.metric = Metric::kMaxHrBpm;
    } else {
      schema_error(path + ".metric", "expected metric name, got \"" + name + "\"");
    }
  }
  rule.threshold = positive_real(required(j, "threshold", path), path + ".threshold");
  rule.extension_ms = positive_int(required(j, "extension_ms", path), path + ".extension_ms");
  if (const auto* v = field(j, "max_applications")) {
    rule.max_applications = static_cast<int>(positive_int(*v, path + ".max_applications"));
  }
  return rule;
}

json prompt_json(const Prompt& p) { return json{{"text", p.text}, {"duration_ms", p.duration_ms}}; }

json action_json(const TargetAction& action) {
  return std::visit(Overloaded{
                        [](const GotoAction& a) { return json{{"type", "goto"}, {"phase", a.phase_id}}; },
                        [](const ReplayAction&) { return json{{"type", "replay"}}; },
                        [](const FinishAction&) { return json{{"type", "finish"}}; },
                        [](const PlayPromptAction& a) {
                          return json{{"type", "play_prompt"}, {"prompt", a.prompt_step_id}};
                        },
                    },
                    action);
}

json step_json(const Step& step) {
  json j{{"id", step.id}};
  std::visit(Overloaded{
                 [&](const Prompt& p) { j["prompt"] = prompt_json(p); },
                 [&](const TimedWait& w) {
                   json b{{"duration_ms", w.duration_ms}};
                   if (!w.cue.empty()) b["cue"] = w.cue;
                   j["timed_wait"] = b;
                 },
                 [&](const BreathHoldSpec& b) {
                   j["breath_hold"] = json{{"hold_ms", b.hold_ms},
                                           {"grace_ms", b.grace_ms},
                                           {"fallback_prompt", prompt_json(b.fallback_prompt)}};
                 },
                 [&](const Choice& c) {
                   json targets = json::array();
                   for (const auto& t : c.targets) {
                     targets.push_back(json{{"id", t.id}, {"label", t.label}, {"action", action_json(t.action)}});
                   }
                   j["choice"] = json{{"targets", targets}};
                 },
                 [&](const QAGroup& q) {
                   json items = json::array();
                   for (const auto& item : q.items) {
                     items.push_back(json{{"question_label", item.question_label},
                                          {"answer", prompt_json(item.answer)}});
                   }
                   j["qa_group"] = json{{"optional", q.optional}, {"items", items}};
                 },
             },
             step.body);
  return j;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(ParseError::Kind::kSyntax, "@" + std::to_string(e.byte), e.what());
  }

  const std::string root = "$";
  expect_object(doc, root);
  expect_keys(doc, root, {"id", "version", "dwell_threshold_ms", "tick_hint_ms", "phases", "adaptation_rules"});

  Scenario s;
  s.id = as_string(required(doc, "id", root), "$.id");
  if (const auto* v = field(doc, "version")) s.version = as_string(*v, "$.version");
  if (const auto* v = field(doc, "dwell_threshold_ms")) s.dwell_threshold_ms = positive_int(*v, "$.dwell_threshold_ms");
  if (const auto* v = field(doc, "tick_hint_ms")) s.tick_hint_ms = positive_int(*v, "$.tick_hint_ms");

  const auto& phases = non_empty_array(required(doc, "phases", root), "$.phases");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const auto p = "$.phases[" + std::to_string(i) + "]";
    const auto& pj = phases[i];
    expect_object(pj, p);
    expect_keys(pj, p, {"id", "kind", "steps", "on_complete"});
    Phase phase;
    phase.id = as_string(required(pj, "id", p), p + ".id");
    phase.kind = parse_kind(required(pj, "kind", p), p + ".kind");
    const auto& steps = non_empty_array(required(pj, "steps", p), p + ".steps");
    for (std::size_t k = 0; k < steps.size(); ++k) {
      phase.steps.push_back(parse_step(steps[k], p + ".steps[" + std::to_string(k) + "]"));
    }
    if (const auto* v = field(pj, "on_complete")) phase.on_complete = as_string(*v, p + ".on_complete");
    s.phases.push_back(std::move(phase));
  }
  // Omitted on_complete falls through to the next phase in document order.
  for (std::size_t i = 0; i < s.phases.size(); ++i) {
    if (s.phases[i].on_complete.empty()) {
      s.phases[i].on_complete = i + 1 < s.phases.size() ? s.phases[i + 1].id : std::string(kEndMarker);
    }
  }

  if (const auto* rules = field(doc, "adaptation_rules")) {
    if (!rules->is_array()) schema_error("$.adaptation_rules", "expected array, got " + type_name(*rules));
    for (std::size_t i = 0; i < rules->size(); ++i) {
      s.adaptation_rules.push_back(parse_rule((*rules)[i], "$.adaptation_rules[" + std::to_string(i) + "]"));
    }
  }
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  json phases = json::array();
  for (const auto& phase : s.phases) {
    json steps = json::array();
    for (const auto& step : phase.steps) steps.push_back(step_json(step));
    phases.push_back(json{{"id", phase.id},
                          {"kind", std::string(to_string(phase.kind))},
                          {"steps", steps},
                          {"on_complete", phase.on_complete}});
  }
  json rules = json::array();
  for (const auto& r : s.adaptation_rules) {
    rules.push_back(json{{"phase_kind", std::string(to_string(r.phase_kind))},
                         {"metric", std::string(to_string(r.metric))},
                         {"threshold", r.threshold},
                         {"extension_ms", r.extension_ms},
                         {"max_applications", r.max_applications}});
  }
  json doc{{"id", s.id},
           {"version", s.version},
           {"dwell_threshold_ms", s.dwell_threshold_ms},
           {"tick_hint_ms", s.tick_hint_ms},
           {"phases", phases},
           {"adaptation_rules", rules}};
  return doc.dump(2) + "\n";
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

}  // namespace rehearsal
