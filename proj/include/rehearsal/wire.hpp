#pragma once

#include <json.hpp>

#include "rehearsal/engine.hpp"

// JSON encodings of engine inputs, outputs and snapshots. Events are flat
// objects: {"t_ms": 1200, "kind": "gaze_enter", "target_id": "finish"}.

namespace rehearsal::wire {

using nlohmann::json;

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json to_json(const InputEvent& ev);
InputEvent input_from_json(const json& j);

json to_json(const OutputEvent& ev);
OutputEvent output_from_json(const json& j);

/// Event body without `t_ms` and `kind` (the log record payload).
json payload_json(const InputPayload& payload);
json payload_json(const OutputPayload& payload);

json to_json(const SessionSnapshot& snap);
SessionSnapshot snapshot_from_json(const json& j);

json to_json(const BreathHoldResult& result);
BreathHoldResult breath_result_from_json(const json& j);

}  // namespace rehearsal::wire
