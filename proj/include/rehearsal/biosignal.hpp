#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "rehearsal/scenario.hpp"

namespace rehearsal {

enum class RespPhase { kInhaling, kExhaling, kHolding };

std::string_view to_string(RespPhase phase);
RespPhase resp_phase_from_string(std::string_view name);

struct SensorSample {
  Millis t_ms = 0;
  double hr_bpm = 0.0;
  RespPhase resp_phase = RespPhase::kInhaling;

  friend bool operator==(const SensorSample&, const SensorSample&) = default;
};

struct SensorSummary {
  Millis start_ms = 0;
  Millis end_ms = 0;
  double mean_hr_bpm = 0.0;
  double min_hr_bpm = 0.0;
  double max_hr_bpm = 0.0;
  double hold_fraction = 0.0;
  std::size_t sample_count = 0;
};

struct PatientProfile {
  double baseline_hr_bpm = 70.0;
  double anxiety_level = 0.0;
  double anxiety_hr_gain_bpm = 30.0;
  double relaxation_time_constant_s = 20.0;
  double noise_sd_bpm = 2.0;

  /// Throws std::invalid_argument when a field is out of range.
  void check() const;

  static PatientProfile calm();
  /// Reference anxious patient: baseline 70, anxiety 1.0, gain 30, tau 20 s, no noise.
  static PatientProfile anxious_noise_free();

  friend bool operator==(const PatientProfile&, const PatientProfile&) = default;
};

struct TimelineSegment {
  PhaseKind kind;
  Millis start_ms;
  Millis end_ms;
};

struct HoldWindow {
  Millis start_ms;
  Millis end_ms;
};

struct Timeline {
  std::vector<TimelineSegment> segments;
  std::vector<HoldWindow> holds;
};

class BiosignalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Heart-rate model driven incrementally in time.
///
///   hr(t) = baseline + anxiety * gain * exp(-R(t) / tau) + noise
///
/// where R(t) is the cumulative time spent in relaxation phases up to t.
/// Before the first relaxation R = 0 (no decay); after a relaxation phase
/// the decayed level is kept. Respiration alternates inhale/exhale on a 4 s
/// cycle (8 s during relaxation) and reads `holding` inside hold windows.
class PatientModel {
 public:
  PatientModel(PatientProfile profile, std::uint64_t seed);

  /// Moves the model clock to `t_ms`. Time since the previous call counts
  /// under the previously given kind; `kind` applies from `t_ms` onward.
  void advance(Millis t_ms, PhaseKind kind);

  /// Noise-free heart rate at the current model time.
  double expected_hr() const;

  SensorSample sample(bool holding);

  Millis now() const { return now_; }
  Millis relaxation_elapsed_ms() const { return relax_ms_; }

 private:
  PatientProfile profile_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};
  Millis now_ = 0;
  Millis relax_ms_ = 0;
  PhaseKind kind_ = PhaseKind::kTutorial;
};

/// Samples at t = start, start + period, ... < end of the last segment.
std::vector<SensorSample> simulate_patient(const PatientProfile& profile, const Timeline& timeline,
                                           Millis sample_period_ms, std::uint64_t seed);

/// Aggregates samples with start_ms <= t < end_ms.
SensorSummary summarize_window(std::span<const SensorSample> samples, Millis start_ms, Millis end_ms);

class UnsupportedMetric : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Strict comparison: true iff summary.mean_hr_bpm > rule.threshold.
bool threshold_check(const SensorSummary& summary, const AdaptationRule& rule);

/// `t_ms,hr_bpm,resp_phase` with a header row.
void write_samples_csv(std::ostream& out, std::span<const SensorSample> samples);

}  // namespace rehearsal
