#include "rehearsal/analytics/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "rehearsal/errors.hpp"

namespace rehearsal::analytics {

using nlohmann::json;

std::string_view to_string(Arm arm) { return arm == Arm::kMr ? "mr" : "control"; }

std::optional<Arm> arm_from_string(std::string_view name) {
  if (name == "mr") return Arm::kMr;
  if (name == "control") return Arm::kControl;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

void check_arm(const ArmSpec& arm, std::string_view name) {
  const std::string where = "arm " + std::string(name) + ": ";
  if (arm.n < 2) throw CohortFormatError(where + "n must be at least 2");
  for (double sd : arm.sd) {
    if (!(sd > 0.0)) throw CohortFormatError(where + "sd must be positive");
  }
  for (double m : arm.mean) {
    if (!std::isfinite(m)) throw CohortFormatError(where + "mean must be finite");
  }
  if (!(arm.correlation >= 0.0 && arm.correlation < 1.0)) {
    throw CohortFormatError(where + "correlation must be in [0, 1)");
  }
  for (double p : {arm.p_breath_hold_first_try, arm.p_scan_paused, arm.p_sedative}) {
    if (!(p >= 0.0 && p <= 1.0)) throw CohortFormatError(where + "probabilities must be in [0, 1]");
  }
  double total = 0.0;
  for (double w : arm.satisfaction_weights) {
    if (!(w >= 0.0)) throw CohortFormatError(where + "satisfaction weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw CohortFormatError(where + "satisfaction weights must not all be zero");
}

void apply_overrides(ArmSpec& arm, const json& j, const std::string& path) {
  if (!j.is_object()) throw CohortFormatError(path + ": expected an object");
  auto number = [&](const json& v, const std::string& key) {
    if (!v.is_number()) throw CohortFormatError(path + "." + key + ": expected a number");
    return v.get<double>();
  };
  auto triple = [&](const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 3) {
      throw CohortFormatError(path + "." + key + ": expected [baseline, prescan, postscan]");
    }
    return std::array<double, 3>{number(v[0], key), number(v[1], key), number(v[2], key)};
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "n") {
      if (!v.is_number_integer()) throw CohortFormatError(path + ".n: expected an integer");
      arm.n = v.get<int>();
    } else if (key == "mean") {
      arm.mean = triple(v, key);
    } else if (key == "sd") {
      arm.sd = triple(v, key);
    } else if (key == "correlation") {
      arm.correlation = number(v, key);
    } else if (key == "p_breath_hold_first_try") {
      arm.p_breath_hold_first_try = number(v, key);
    } else if (key == "p_scan_paused") {
      arm.p_scan_paused = number(v, key);
    } else if (key == "p_sedative") {
      arm.p_sedative = number(v, key);
    } else if (key == "satisfaction_weights") {
      if (!v.is_array() || v.size() != 5) throw CohortFormatError(path + "." + key + ": expected 5 weights");
      for (std::size_t i = 0; i < 5; ++i) arm.satisfaction_weights[i] = number(v[i], key);
    } else {
      throw CohortFormatError(path + "." + key + ": unknown parameter");
    }
  }
}

}  // namespace

void CohortSpec::check() const {
  try {
    scoring.check();
  } catch (const StatError& e) {
    throw CohortFormatError(e.what());
  }
  check_arm(mr, "mr");
  check_arm(control, "control");
}

CohortSpec default_cohort_spec(int n_per_arm) {
  CohortSpec spec;
  // Baseline and pre-scan means are the target group means; the
  // post-scan means and the common sd of 9 are assumptions.
  spec.mr.n = n_per_arm;
  spec.mr.mean = {46.2, 34.8, 33.5};
  spec.mr.p_breath_hold_first_try = 0.88;
  spec.mr.p_scan_paused = 0.0;
  spec.mr.p_sedative = 0.0;
  spec.mr.satisfaction_weights = {0.0, 0.0, 0.04, 0.36, 0.60};

  spec.control.n = n_per_arm;
  spec.control.mean = {45.5, 41.6, 40.5};
  spec.control.p_breath_hold_first_try = 0.60;
  spec.control.p_scan_paused = 0.08;
  spec.control.p_sedative = 0.12;
  spec.control.satisfaction_weights = {0.04, 0.08, 0.16, 0.44, 0.28};
  return spec;
}

CohortSpec cohort_spec_from_json(const json& j, int n_per_arm) {
  if (!j.is_object()) throw CohortFormatError("cohort parameters must be a JSON object");
  auto spec = default_cohort_spec(n_per_arm);
  for (const auto& [key, v] : j.items()) {
    if (key == "mr") {
      apply_overrides(spec.mr, v, "$.mr");
    } else if (key == "control") {
      apply_overrides(spec.control, v, "$.control");
    } else {
      throw CohortFormatError("$." + key + ": unknown parameter");
    }
  }
  spec.check();
  return spec;
}

// ---------------------------------------------------------------------------
// Simulation

std::vector<ParticipantRow> simulate_cohort(const CohortSpec& spec, std::uint64_t seed) {
  spec.check();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double lo = spec.scoring.min_total();
  const double hi = spec.scoring.max_total();

  std::vector<ParticipantRow> rows;
  for (const auto* arm_spec : {&spec.mr, &spec.control}) {
    const Arm arm = arm_spec == &spec.mr ? Arm::kMr : Arm::kControl;
    const double shared = std::sqrt(arm_spec->correlation);
    const double own = std::sqrt(1.0 - arm_spec->correlation);
    std::bernoulli_distribution first_try(arm_spec->p_breath_hold_first_try);
    std::bernoulli_distribution paused(arm_spec->p_scan_paused);
    std::bernoulli_distribution sedative(arm_spec->p_sedative);
    std::discrete_distribution<int> satisfaction(arm_spec->satisfaction_weights.begin(),
                                                 arm_spec->satisfaction_weights.end());
    for (int i = 0; i < arm_spec->n; ++i) {
      ParticipantRow row;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%03d", arm == Arm::kMr ? "mr" : "ctl", i + 1);
      row.id = id;
      row.arm = arm;
      const double z0 = normal(rng);
      std::array<double, 3> scores{};
      for (std::size_t t = 0; t < 3; ++t) {
        const double z = shared * z0 + own * normal(rng);
        scores[t] = std::clamp(std::round(arm_spec->mean[t] + arm_spec->sd[t] * z), lo, hi);
      }
      row.stai_baseline = scores[kBaseline];
      row.stai_prescan = scores[kPrescan];
      row.stai_postscan = scores[kPostscan];
      row.breath_hold_first_try = first_try(rng);
      row.scan_paused = paused(rng);
      row.sedative_given = sedative(rng);
      row.satisfaction = satisfaction(rng) + 1;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

void write_cohort_csv(std::ostream& out, const std::vector<ParticipantRow>& rows) {
  for (std::size_t i = 0; i < kCohortColumns.size(); ++i) out << (i ? "," : "") << kCohortColumns[i];
  out << '\n';
  for (const auto& r : rows) {
    out << r.id << ',' << to_string(r.arm) << ',' << format_number(r.stai_baseline) << ','
        << format_number(r.stai_prescan) << ',' << format_number(r.stai_postscan) << ','
        << (r.breath_hold_first_try ? "true" : "false") << ',' << (r.scan_paused ? "true" : "false") << ','
        << (r.sedative_given ? "true" : "false") << ',' << r.satisfaction << '\n';
  }
}

std::vector<ParticipantRow> read_cohort_csv(std::istream& in, const ScoringSpec& scoring) {
  std::string line;
  if (!std::getline(in, line)) throw CohortFormatError("cohort CSV is empty (header row required)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = trim(header[i]);
    if (std::find(kCohortColumns.begin(), kCohortColumns.end(), name) == kCohortColumns.end()) {
      throw CohortFormatError("line 1: unknown column \"" + name + "\"");
    }
    if (!index.emplace(name, i).second) throw CohortFormatError("line 1: duplicate column \"" + name + "\"");
  }
  for (const auto column : kCohortColumns) {
    if (index.count(std::string(column)) == 0) {
      throw CohortFormatError("line 1: missing column \"" + std::string(column) + "\"");
    }
  }

  std::vector<ParticipantRow> rows;
  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (cells.size() != header.size()) {
      throw CohortFormatError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(cells.size()));
    }
    auto cell = [&](std::string_view column) { return trim(cells[index.at(std::string(column))]); };
    auto score = [&](std::string_view column) {
      const auto text = cell(column);
      double v = 0.0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw CohortFormatError(where + std::string(column) + ": expected a number, got \"" + text + "\"");
      }
      if (v < scoring.min_total() || v > scoring.max_total()) {
        throw CohortFormatError(where + std::string(column) + ": " + text + " is outside " +
                                std::to_string(scoring.min_total()) + ".." + std::to_string(scoring.max_total()));
      }
      return v;
    };
    auto flag = [&](std::string_view column) {
      const auto text = cell(column);
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw CohortFormatError(where + std::string(column) + ": expected true/false, got \"" + text + "\"");
    };

    ParticipantRow row;
    row.id = cell("id");
    if (row.id.empty()) throw CohortFormatError(where + "id: must not be empty");
    if (!ids.insert(row.id).second) throw CohortFormatError(where + "id: duplicate \"" + row.id + "\"");
    const auto arm = arm_from_string(cell("arm"));
    if (!arm) throw CohortFormatError(where + "arm: expected mr or control, got \"" + cell("arm") + "\"");
    row.arm = *arm;
    row.stai_baseline = score("stai_baseline");
    row.stai_prescan = score("stai_prescan");
    row.stai_postscan = score("stai_postscan");
    row.breath_hold_first_try = flag("breath_hold_first_try");
    row.scan_paused = flag("scan_paused");
    row.sedative_given = flag("sedative_given");
    const auto sat = cell("satisfaction");
    int s = 0;
    const auto res = std::from_chars(sat.data(), sat.data() + sat.size(), s);
    if (res.ec != std::errc() || res.ptr != sat.data() + sat.size() || s < 1 || s > 5) {
      throw CohortFormatError(where + "satisfaction: expected an integer 1..5, got \"" + sat + "\"");
    }
    row.satisfaction = s;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ParticipantRow> read_cohort_csv_file(const std::filesystem::path& path, const ScoringSpec& scoring) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cohort file '" + path.string() + "'");
  return read_cohort_csv(in, scoring);
}

}  // namespace rehearsal::analytics
