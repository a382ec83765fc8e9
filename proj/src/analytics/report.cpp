#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>

#include "rehearsal/analytics/cohort.hpp"

namespace rehearsal::analytics {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kTimepointNames = {"baseline", "prescan", "postscan"};

double score_at(const ParticipantRow& r, std::size_t t) {
  return t == kBaseline ? r.stai_baseline : t == kPrescan ? r.stai_prescan : r.stai_postscan;
}

std::vector<double> column(const std::vector<const ParticipantRow*>& rows, std::size_t t) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto* r : rows) out.push_back(score_at(*r, t));
  return out;
}

std::vector<double> change(const std::vector<const ParticipantRow*>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto* r : rows) out.push_back(r->stai_prescan - r->stai_baseline);
  return out;
}

ArmSummary summarize(Arm arm, const std::vector<const ParticipantRow*>& rows, double threshold) {
  ArmSummary s;
  s.arm = arm;
  s.n = static_cast<int>(rows.size());
  for (std::size_t t = 0; t < 3; ++t) {
    const auto xs = column(rows, t);
    s.mean[t] = mean(xs);
    s.sd[t] = xs.size() >= 2 ? std::sqrt(variance(xs)) : 0.0;
  }
  double satisfaction = 0.0;
  for (const auto* r : rows) {
    s.breath_hold_first_try += r->breath_hold_first_try ? 1 : 0;
    s.scan_paused += r->scan_paused ? 1 : 0;
    s.sedative_given += r->sedative_given ? 1 : 0;
    s.prescan_below_threshold += r->stai_prescan < threshold ? 1 : 0;
    s.satisfaction_good += r->satisfaction >= 4 ? 1 : 0;
    satisfaction += r->satisfaction;
  }
  s.prescan_below_fraction = proportion_below(column(rows, kPrescan), threshold);
  s.satisfaction_mean = satisfaction / s.n;
  return s;
}

TestEntry run_test(std::string name, std::string method, std::string comparison,
                   const std::function<StatResult()>& compute) {
  TestEntry e;
  e.name = std::move(name);
  e.method = std::move(method);
  e.comparison = std::move(comparison);
  try {
    e.result = compute();
  } catch (const StatError& err) {
    e.computable = false;
    e.reason = err.what();
  }
  return e;
}

Table2x2 by_arm(const ArmSummary& mr, const ArmSummary& control, int ArmSummary::*count) {
  return Table2x2{{{mr.*count, mr.n - mr.*count}, {control.*count, control.n - control.*count}}};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string p_text(double p) { return p < 0.0001 ? "<0.0001" : fixed(p, 4); }

json summary_json(const ArmSummary& s) {
  json means = json::object();
  json sds = json::object();
  for (std::size_t t = 0; t < 3; ++t) {
    means[std::string(kTimepointNames[t])] = s.mean[t];
    sds[std::string(kTimepointNames[t])] = s.sd[t];
  }
  return json{{"arm", to_string(s.arm)},
              {"n", s.n},
              {"stai_mean", means},
              {"stai_sd", sds},
              {"breath_hold_first_try", s.breath_hold_first_try},
              {"scan_paused", s.scan_paused},
              {"sedative_given", s.sedative_given},
              {"prescan_below_threshold", s.prescan_below_threshold},
              {"prescan_below_fraction", s.prescan_below_fraction},
              {"satisfaction_mean", s.satisfaction_mean},
              {"satisfaction_good", s.satisfaction_good}};
}

}  // namespace

const TestEntry& CohortReport::test(std::string_view name) const {
  const auto it = std::find_if(tests.begin(), tests.end(), [&](const TestEntry& e) { return e.name == name; });
  if (it == tests.end()) throw std::out_of_range("no test named " + std::string(name));
  return *it;
}

CohortReport cohort_report(const std::vector<ParticipantRow>& rows, Sidedness fisher_sided,
                           double anxiety_threshold) {
  std::vector<const ParticipantRow*> mr;
  std::vector<const ParticipantRow*> control;
  for (const auto& r : rows) (r.arm == Arm::kMr ? mr : control).push_back(&r);
  if (mr.empty()) throw CohortFormatError("cohort has no rows in arm mr");
  if (control.empty()) throw CohortFormatError("cohort has no rows in arm control");

  CohortReport report;
  report.anxiety_threshold = anxiety_threshold;
  report.fisher_sided = fisher_sided;
  report.mr = summarize(Arm::kMr, mr, anxiety_threshold);
  report.control = summarize(Arm::kControl, control, anxiety_threshold);

  const auto mr_base = column(mr, kBaseline);
  const auto ctl_base = column(control, kBaseline);
  const auto mr_pre = column(mr, kPrescan);
  const auto ctl_pre = column(control, kPrescan);
  const auto mr_change = change(mr);
  const auto ctl_change = change(control);

  report.tests.push_back(run_test("baseline_unpaired_t", "unpaired t (pooled)", "baseline: mr vs control",
                                  [&] { return unpaired_t_test(mr_base, ctl_base); }));
  // d is reported as control - mr so that a calmer MR arm gives a positive value.
  report.tests.push_back(run_test("prescan_unpaired_t", "unpaired t (pooled)", "prescan: control vs mr",
                                  [&] { return unpaired_t_test(ctl_pre, mr_pre); }));
  report.tests.push_back(run_test("change_unpaired_t", "unpaired t (pooled)",
                                  "prescan - baseline: mr vs control",
                                  [&] { return unpaired_t_test(mr_change, ctl_change); }));
  report.tests.push_back(run_test("paired_mr", "paired t", "mr: baseline -> prescan",
                                  [&] { return paired_t_test(mr_base, mr_pre); }));
  report.tests.push_back(run_test("paired_control", "paired t", "control: baseline -> prescan",
                                  [&] { return paired_t_test(ctl_base, ctl_pre); }));

  const auto paused = by_arm(report.mr, report.control, &ArmSummary::scan_paused);
  auto fisher = run_test("fisher_scan_paused", "Fisher exact (" + std::string(to_string(fisher_sided)) + ")",
                         "scan paused: mr vs control", [&] { return fisher_exact_2x2(paused, fisher_sided); });
  if (fisher.computable) {
    fisher.p_two_sided = fisher_exact_2x2(paused, Sidedness::kTwo).p_value;
    fisher.note = "one-sided p is taken in the direction of the observed difference";
  }
  report.tests.push_back(std::move(fisher));

  const auto first_try = by_arm(report.mr, report.control, &ArmSummary::breath_hold_first_try);
  auto chi = run_test("chi_square_breath_hold", "Pearson chi-square (no continuity correction)",
                      "breath-hold first try: mr vs control", [&] { return chi_square_2x2(first_try, false); });
  chi.note = "computed by this tool; no reference value exists";
  report.tests.push_back(std::move(chi));
  return report;
}

json to_json(const CohortReport& report) {
  json tests = json::array();
  for (const auto& e : report.tests) {
    json t{{"name", e.name}, {"method", e.method}, {"comparison", e.comparison}, {"computable", e.computable}};
    if (e.computable) {
      t["statistic"] = e.result.statistic;
      t["df"] = e.result.df;
      t["p_value"] = e.result.p_value;
      if (e.result.effect_size) t["effect_size_d"] = *e.result.effect_size;
      if (e.p_two_sided) t["p_two_sided"] = *e.p_two_sided;
    } else {
      t["reason"] = e.reason;
    }
    if (!e.note.empty()) t["note"] = e.note;
    tests.push_back(std::move(t));
  }
  return json{{"anxiety_threshold", report.anxiety_threshold},
              {"fisher_sidedness", to_string(report.fisher_sided)},
              {"arms", json::array({summary_json(report.mr), summary_json(report.control)})},
              {"tests", tests}};
}

std::string to_text(const CohortReport& report) {
  std::ostringstream out;
  char line[256];
  const auto& m = report.mr;
  const auto& c = report.control;
  std::snprintf(line, sizeof line, "%-28s %14s %14s\n", "", "mr", "control");
  out << line;
  auto row = [&](const std::string& label, const std::string& a, const std::string& b) {
    std::snprintf(line, sizeof line, "%-28s %14s %14s\n", label.c_str(), a.c_str(), b.c_str());
    out << line;
  };
  row("n", std::to_string(m.n), std::to_string(c.n));
  for (std::size_t t = 0; t < 3; ++t) {
    row("STAI " + std::string(kTimepointNames[t]) + " mean (sd)",
        fixed(m.mean[t], 1) + " (" + fixed(m.sd[t], 1) + ")", fixed(c.mean[t], 1) + " (" + fixed(c.sd[t], 1) + ")");
  }
  const auto below = "prescan below " + fixed(report.anxiety_threshold, 0);
  row(below, std::to_string(m.prescan_below_threshold) + " (" + fixed(100.0 * m.prescan_below_fraction, 0) + "%)",
      std::to_string(c.prescan_below_threshold) + " (" + fixed(100.0 * c.prescan_below_fraction, 0) + "%)");
  row("breath-hold first try", std::to_string(m.breath_hold_first_try), std::to_string(c.breath_hold_first_try));
  row("scan paused", std::to_string(m.scan_paused), std::to_string(c.scan_paused));
  row("sedative given", std::to_string(m.sedative_given), std::to_string(c.sedative_given));
  row("satisfaction 4-5", std::to_string(m.satisfaction_good), std::to_string(c.satisfaction_good));
  row("satisfaction mean", fixed(m.satisfaction_mean, 2), fixed(c.satisfaction_mean, 2));

  out << '\n';
  std::snprintf(line, sizeof line, "%-24s %10s %6s %10s %8s\n", "test", "statistic", "df", "p", "d");
  out << line;
  for (const auto& e : report.tests) {
    if (!e.computable) {
      std::snprintf(line, sizeof line, "%-24s not computable: %s\n", e.name.c_str(), e.reason.c_str());
      out << line;
      continue;
    }
    const auto d = e.result.effect_size ? fixed(*e.result.effect_size, 2) : std::string("-");
    std::snprintf(line, sizeof line, "%-24s %10s %6s %10s %8s\n", e.name.c_str(), fixed(e.result.statistic, 3).c_str(),
                  fixed(e.result.df, 0).c_str(), p_text(e.result.p_value).c_str(), d.c_str());
    out << line;
  }
  out << '\n';
  for (const auto& e : report.tests) {
    out << e.name << ": " << e.method << ", " << e.comparison;
    if (e.p_two_sided) out << "; two-sided p = " << p_text(*e.p_two_sided);
    if (!e.note.empty()) out << "; " << e.note;
    out << '\n';
  }
  return out.str();
}

}  // namespace rehearsal::analytics
