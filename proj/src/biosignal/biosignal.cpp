#include "rehearsal/biosignal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace rehearsal {

std::string_view to_string(RespPhase phase) {
  switch (phase) {
    case RespPhase::kInhaling: return "inhaling";
    case RespPhase::kExhaling: return "exhaling";
    case RespPhase::kHolding: return "holding";
  }
  return "unknown";
}

RespPhase resp_phase_from_string(std::string_view name) {
  if (name == "inhaling") return RespPhase::kInhaling;
  if (name == "exhaling") return RespPhase::kExhaling;
  if (name == "holding") return RespPhase::kHolding;
  throw std::invalid_argument("unknown resp_phase \"" + std::string(name) + "\"");
}

void PatientProfile::check() const {
  if (!(baseline_hr_bpm >= 40.0 && baseline_hr_bpm <= 180.0)) {
    throw std::invalid_argument("baseline_hr_bpm must be in [40, 180]");
  }
  if (!(anxiety_level >= 0.0 && anxiety_level <= 1.0)) throw std::invalid_argument("anxiety_level must be in [0, 1]");
  if (!(anxiety_hr_gain_bpm > 0.0)) throw std::invalid_argument("anxiety_hr_gain_bpm must be positive");
  if (!(relaxation_time_constant_s > 0.0)) throw std::invalid_argument("relaxation_time_constant_s must be positive");
  if (!(noise_sd_bpm >= 0.0)) throw std::invalid_argument("noise_sd_bpm must be non-negative");
}

PatientProfile PatientProfile::calm() { return PatientProfile{70.0, 0.0, 30.0, 20.0, 2.0}; }

PatientProfile PatientProfile::anxious_noise_free() { return PatientProfile{70.0, 1.0, 30.0, 20.0, 0.0}; }

PatientModel::PatientModel(PatientProfile profile, std::uint64_t seed) : profile_(profile), rng_(seed) {
  profile_.check();
}

void PatientModel::advance(Millis t_ms, PhaseKind kind) {
  if (t_ms < now_) throw BiosignalError("patient model time went backwards");
  if (kind_ == PhaseKind::kRelaxation) relax_ms_ += t_ms - now_;
  now_ = t_ms;
  kind_ = kind;
}

double PatientModel::expected_hr() const {
  const double tau_ms = profile_.relaxation_time_constant_s * 1000.0;
  const double decay = std::exp(-static_cast<double>(relax_ms_) / tau_ms);
  return profile_.baseline_hr_bpm + profile_.anxiety_level * profile_.anxiety_hr_gain_bpm * decay;
}

SensorSample PatientModel::sample(bool holding) {
  double hr = expected_hr();
  if (profile_.noise_sd_bpm > 0.0) hr += profile_.noise_sd_bpm * noise_(rng_);
  hr = std::max(hr, 1.0);

  RespPhase resp = RespPhase::kHolding;
  if (!holding) {
    const Millis cycle = kind_ == PhaseKind::kRelaxation ? 8000 : 4000;
    resp = (now_ % cycle) < cycle / 2 ? RespPhase::kInhaling : RespPhase::kExhaling;
  }
  return SensorSample{now_, hr, resp};
}

std::vector<SensorSample> simulate_patient(const PatientProfile& profile, const Timeline& timeline,
                                           Millis sample_period_ms, std::uint64_t seed) {
  if (timeline.segments.empty()) throw BiosignalError("timeline is empty");
  if (sample_period_ms <= 0) throw BiosignalError("sample period must be positive");
  for (std::size_t i = 0; i < timeline.segments.size(); ++i) {
    const auto& seg = timeline.segments[i];
    if (seg.end_ms <= seg.start_ms) throw BiosignalError("timeline segment has non-positive length");
    if (i > 0 && seg.start_ms != timeline.segments[i - 1].end_ms) throw BiosignalError("timeline is not contiguous");
  }

  PatientModel model(profile, seed);
  std::vector<SensorSample> out;
  const Millis start = timeline.segments.front().start_ms;
  const Millis end = timeline.segments.back().end_ms;
  model.advance(start, timeline.segments.front().kind);

  std::size_t seg = 0;
  for (Millis t = start; t < end; t += sample_period_ms) {
    // Walk segment boundaries so relaxation time accrues exactly.
    while (timeline.segments[seg].end_ms <= t) {
      model.advance(timeline.segments[seg].end_ms, timeline.segments[seg + 1].kind);
      ++seg;
    }
    model.advance(t, timeline.segments[seg].kind);
    const bool holding = std::any_of(timeline.holds.begin(), timeline.holds.end(),
                                     [t](const HoldWindow& w) { return t >= w.start_ms && t <= w.end_ms; });
    out.push_back(model.sample(holding));
  }
  return out;
}

SensorSummary summarize_window(std::span<const SensorSample> samples, Millis start_ms, Millis end_ms) {
  if (end_ms <= start_ms) throw BiosignalError("summary window must have start < end");
  SensorSummary s{start_ms, end_ms, 0.0, std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(), 0.0, 0};
  double sum = 0.0;
  std::size_t holding = 0;
  for (const auto& sample : samples) {
    if (sample.t_ms < start_ms || sample.t_ms >= end_ms) continue;
    sum += sample.hr_bpm;
    s.min_hr_bpm = std::min(s.min_hr_bpm, sample.hr_bpm);
    s.max_hr_bpm = std::max(s.max_hr_bpm, sample.hr_bpm);
    holding += sample.resp_phase == RespPhase::kHolding ? 1 : 0;
    ++s.sample_count;
  }
  if (s.sample_count == 0) throw BiosignalError("no samples in summary window");
  const auto n = static_cast<double>(s.sample_count);
  // Clamp guards the min <= mean <= max invariant against rounding.
  s.mean_hr_bpm = std::clamp(sum / n, s.min_hr_bpm, s.max_hr_bpm);
  s.hold_fraction = static_cast<double>(holding) / n;
  return s;
}

bool threshold_check(const SensorSummary& summary, const AdaptationRule& rule) {
  if (rule.metric != Metric::kMeanHrBpm) {
    throw UnsupportedMetric("adaptation metric " + std::string(to_string(rule.metric)) + " is not supported");
  }
  return summary.mean_hr_bpm > rule.threshold;
}

void write_samples_csv(std::ostream& out, std::span<const SensorSample> samples) {
  out << "t_ms,hr_bpm,resp_phase\n";
  const auto precision = out.precision(10);
  for (const auto& s : samples) out << s.t_ms << ',' << s.hr_bpm << ',' << to_string(s.resp_phase) << '\n';
  out.precision(precision);
}

}  // namespace rehearsal
