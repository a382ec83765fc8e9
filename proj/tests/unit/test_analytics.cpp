#include <doctest.h>

#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "rehearsal/analytics/cohort.hpp"
#include "rehearsal/analytics/permutation.hpp"
#include "rehearsal/analytics/special.hpp"
#include "rehearsal/analytics/stai.hpp"
#include "rehearsal/analytics/stats.hpp"
#include "rehearsal/errors.hpp"
#include "stat_oracles.hpp"

using namespace rehearsal::analytics;
using doctest::Approx;

namespace {

std::vector<double> v(std::initializer_list<double> xs) { return std::vector<double>(xs); }

std::vector<ParticipantRow> load(const std::string& name) { return read_cohort_csv_file(testutil::fixture(name)); }

}  // namespace

TEST_SUITE("analytics.special") {
  TEST_CASE("incomplete beta matches closed forms") {
    for (double x : {0.0, 0.05, 0.3, 0.5, 0.77, 0.999, 1.0}) {
      for (double b : {0.5, 1.0, 2.5, 7.0}) {
        CHECK(incomplete_beta(1.0, b, x) == Approx(1.0 - std::pow(1.0 - x, b)).epsilon(1e-10));
        CHECK(incomplete_beta(b, 1.0, x) == Approx(std::pow(x, b)).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("incomplete beta matches numerical integration") {
    for (double a : {2.0, 3.5, 5.0, 12.5}) {
      for (double b : {1.0, 3.0, 9.5}) {
        for (double x : {0.1, 0.4, 0.6, 0.9}) {
          CHECK(std::abs(incomplete_beta(a, b, x) - oracle::beta_cdf(a, b, x)) < 1e-9);
        }
      }
    }
  }

  TEST_CASE("incomplete beta symmetry I_x(a,b) = 1 - I_{1-x}(b,a)") {
    for (double a : {0.5, 3.0, 24.0}) {
      for (double b : {0.5, 2.0, 0.5 * 48}) {
        for (double x : {0.01, 0.2, 0.5, 0.93}) {
          CHECK(incomplete_beta(a, b, x) + incomplete_beta(b, a, 1.0 - x) == Approx(1.0).epsilon(1e-10));
        }
      }
    }
  }

  TEST_CASE("chi-square tail matches closed forms for df 1, 2 and 4") {
    for (double x : {0.0, 0.01, 0.5, 1.0, 3.84, 5.094, 10.0, 30.0}) {
      CHECK(chi_square_sf(x, 1.0) == Approx(std::erfc(std::sqrt(x / 2.0))).epsilon(1e-10));
      CHECK(chi_square_sf(x, 2.0) == Approx(std::exp(-x / 2.0)).epsilon(1e-10));
      CHECK(chi_square_sf(x, 4.0) == Approx(std::exp(-x / 2.0) * (1.0 + x / 2.0)).epsilon(1e-10));
    }
  }

  TEST_CASE("incomplete gamma P + Q = 1") {
    for (double a : {0.5, 1.0, 3.3, 20.0}) {
      for (double x : {0.1, 1.0, 4.0, 25.0}) {
        CHECK(incomplete_gamma_p(a, x) + incomplete_gamma_q(a, x) == Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("t tail matches numerical integration of the density") {
    for (double df : {1.0, 3.0, 4.0, 24.0, 48.0}) {
      for (double t : {0.0, 0.28, 1.0, 2.01, 3.674, 6.0}) {
        CHECK(std::abs(student_t_two_sided_p(t, df) - oracle::t_two_sided(t, df)) < 1e-8);
        CHECK(student_t_two_sided_p(-t, df) == student_t_two_sided_p(t, df));
      }
    }
  }

  TEST_CASE("t cdf is consistent with the two-sided tail") {
    CHECK(student_t_cdf(0.0, 5.0) == Approx(0.5));
    CHECK(student_t_cdf(2.0, 7.0) == Approx(1.0 - student_t_two_sided_p(2.0, 7.0) / 2.0).epsilon(1e-12));
    CHECK(student_t_cdf(-2.0, 7.0) == Approx(student_t_two_sided_p(2.0, 7.0) / 2.0).epsilon(1e-12));
  }
}

TEST_SUITE("analytics.stai") {
  TEST_CASE("all-ones with no reversed items is the lower bound") {
    const std::vector<int> ones(20, 1);
    CHECK(score_stai(ones, ScoringSpec{}) == 20);
  }

  TEST_CASE("reversed items are scored from the other end") {
    ScoringSpec spec;
    for (int i = 1; i <= 10; ++i) spec.reversed_items.insert(2 * i);
    const std::vector<int> ones(20, 1);
    CHECK(score_stai(ones, spec) == 10 * 1 + 10 * 4);
  }

  TEST_CASE("range and length violations") {
    std::vector<int> r(20, 2);
    r[3] = 5;
    CHECK_THROWS_AS(score_stai(r, ScoringSpec{}), StatError);
    CHECK_THROWS_AS(score_stai(std::vector<int>(19, 2), ScoringSpec{}), StatError);
    ScoringSpec bad;
    bad.reversed_items = {21};
    CHECK_THROWS_AS(score_stai(std::vector<int>(20, 2), bad), StatError);
  }

  TEST_CASE("monotone in each item") {
    ScoringSpec spec;
    spec.reversed_items = {1, 2, 5, 8, 10, 11, 15, 16, 19, 20};
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> resp(1, 4);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<int> r(20);
      for (auto& x : r) x = resp(rng);
      const int base = score_stai(r, spec);
      for (int i = 0; i < 20; ++i) {
        if (r[static_cast<std::size_t>(i)] == 4) continue;
        auto up = r;
        ++up[static_cast<std::size_t>(i)];
        const int s = score_stai(up, spec);
        if (spec.reversed_items.count(i + 1)) {
          CHECK(s <= base);
        } else {
          CHECK(s >= base);
        }
      }
    }
  }
}

TEST_SUITE("analytics.t_tests") {
  TEST_CASE("identical samples give t = 0, p = 1") {
    const auto a = v({40, 42, 47, 51});
    const auto r = unpaired_t_test(a, a);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == Approx(1.0));
    CHECK(*r.effect_size == 0.0);
  }

  TEST_CASE("hand-computed unpaired example") {
    const auto r = unpaired_t_test(v({1, 2, 3}), v({4, 5, 6}));
    // pooled sd 1, se = sqrt(2/3)
    CHECK(r.statistic == Approx(-3.0 / std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    CHECK(r.statistic == Approx(-3.674).epsilon(1e-3));
    CHECK(r.df == 4.0);
    CHECK(r.p_value == Approx(0.0213).epsilon(2e-3));
    CHECK(std::abs(r.p_value - oracle::t_two_sided(r.statistic, 4.0)) < 1e-8);
    CHECK(*r.effect_size == Approx(-3.0));
  }

  TEST_CASE("constructed arms with means 46.2 vs 45.5 and sd 9 give p near 0.78") {
    // 25 values with exact mean and sd: mean +- sd * c for a symmetric pattern.
    auto arm = [](double m) {
      std::vector<double> xs;
      const double c = 9.0 * std::sqrt(24.0 / 25.0) ;
      for (int i = 0; i < 12; ++i) {
        xs.push_back(m + c);
        xs.push_back(m - c);
      }
      xs.push_back(m);
      return xs;
    };
    auto a = arm(46.2);
    auto b = arm(45.5);
    // rescale so the sample sd is exactly 9
    for (auto* xs : {&a, &b}) {
      const double mu = mean(*xs);
      const double k = 9.0 / std::sqrt(variance(*xs));
      for (auto& x : *xs) x = mu + (x - mu) * k;
    }
    CHECK(std::sqrt(variance(a)) == Approx(9.0));
    const auto r = unpaired_t_test(a, b);
    CHECK(r.p_value == Approx(0.78).epsilon(0.01));
  }

  TEST_CASE("degenerate unpaired inputs") {
    CHECK_THROWS_AS(unpaired_t_test(v({1}), v({1, 2})), StatError);
    CHECK_THROWS_AS(unpaired_t_test(v({3, 3}), v({3, 3, 3})), StatError);
  }

  TEST_CASE("paired examples") {
    const auto pre = v({50, 48, 52, 47, 49});
    CHECK(paired_t_test(pre, pre).statistic == 0.0);
    CHECK(paired_t_test(pre, pre).p_value == 1.0);
    CHECK_THROWS_AS(paired_t_test(pre, v({45, 43, 47, 42, 44})), StatError);  // constant -5
    const auto post = v({50 - 12, 48 - 11, 52 - 10, 47 - 11, 49 - 13});
    const auto r = paired_t_test(pre, post);
    CHECK(r.df == 4.0);
    CHECK(r.p_value < 0.001);
    CHECK(std::abs(r.p_value - oracle::t_two_sided(r.statistic, 4.0)) < 1e-8);
    CHECK_THROWS_AS(paired_t_test(pre, v({1, 2})), StatError);
    CHECK_THROWS_AS(paired_t_test(v({1}), v({2})), StatError);
  }

  TEST_CASE("random t tests agree with the integration oracle") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> a(std::uniform_int_distribution<int>(2, 15)(rng));
      std::vector<double> b(std::uniform_int_distribution<int>(2, 15)(rng));
      for (auto& x : a) x = 40 + 9 * z(rng);
      for (auto& x : b) x = 43 + 9 * z(rng);
      const auto r = unpaired_t_test(a, b);
      CHECK(r.df == static_cast<double>(a.size() + b.size() - 2));
      CHECK(std::abs(r.p_value - oracle::t_two_sided(r.statistic, r.df)) < 1e-6);
    }
  }
}

TEST_SUITE("analytics.cohens_d") {
  TEST_CASE("examples") {
    CHECK(cohens_d(v({1, 2, 3}), v({3, 2, 1})) == 0.0);
    CHECK(cohens_d(v({4, 5, 6}), v({1, 2, 3})) == Approx(3.0));
    CHECK(cohens_d(v({1, 2, 3}), v({4, 5, 6})) == -cohens_d(v({4, 5, 6}), v({1, 2, 3})));
    CHECK((41.6 - 34.8) / 9.7 == Approx(0.701).epsilon(1e-3));
  }
}

TEST_SUITE("analytics.proportion_below") {
  TEST_CASE("strict threshold") {
    CHECK(proportion_below(std::vector<double>(5, 39.0), 40.0) == 1.0);
    CHECK(proportion_below(std::vector<double>(5, 40.0), 40.0) == 0.0);
    std::vector<double> xs(25, 45.0);
    std::fill(xs.begin(), xs.begin() + 20, 30.0);
    CHECK(proportion_below(xs, 40.0) == Approx(0.80));
    CHECK_THROWS_AS(proportion_below(std::vector<double>{}, 40.0), StatError);
  }
}

TEST_SUITE("analytics.fisher") {
  TEST_CASE("paused-scan counts") {
    const Table2x2 t{{{0, 25}, {2, 23}}};
    CHECK(fisher_exact_2x2(t, Sidedness::kOne).p_value == Approx(0.2449).epsilon(1e-3));
    CHECK(fisher_exact_2x2(t, Sidedness::kTwo).p_value == Approx(0.4898).epsilon(1e-3));
    // only x = 0 is as extreme: C(25,2) / C(50,2)
    CHECK(fisher_exact_2x2(t, Sidedness::kOne).p_value == Approx(25.0 * 24.0 / (50.0 * 49.0)).epsilon(1e-12));
  }

  TEST_CASE("symmetric table gives p = 1 either way") {
    const Table2x2 t{{{5, 5}, {5, 5}}};
    CHECK(fisher_exact_2x2(t, Sidedness::kOne).p_value == 1.0);
    CHECK(fisher_exact_2x2(t, Sidedness::kTwo).p_value == Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("zero margins and negative cells are errors") {
    CHECK_THROWS_AS(fisher_exact_2x2(Table2x2{{{0, 0}, {3, 4}}}), StatError);
    CHECK_THROWS_AS(fisher_exact_2x2(Table2x2{{{0, 3}, {0, 4}}}), StatError);
    CHECK_THROWS_AS(fisher_exact_2x2(Table2x2{{{-1, 3}, {2, 4}}}), StatError);
  }

  TEST_CASE("matches exact enumeration on random tables") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
      const auto t = oracle::random_table(rng, 60);
      const double one = fisher_exact_2x2(t, Sidedness::kOne).p_value;
      const double two = fisher_exact_2x2(t, Sidedness::kTwo).p_value;
      CHECK(std::abs(one - oracle::fisher(t, false)) < 1e-12);
      CHECK(std::abs(two - oracle::fisher(t, true)) < 1e-12);
      CHECK(one >= 0.0);
      CHECK(two <= 1.0);
      CHECK(one <= two + 1e-12);
    }
  }
}

TEST_SUITE("analytics.chi_square") {
  TEST_CASE("breath-hold counts") {
    const Table2x2 t{{{22, 3}, {15, 10}}};
    const auto r = chi_square_2x2(t, false);
    // expected 18.5 / 6.5 in every row
    const double hand = 3.5 * 3.5 * (2.0 / 18.5 + 2.0 / 6.5);
    CHECK(r.statistic == Approx(hand).epsilon(1e-12));
    CHECK(r.statistic == Approx(5.094).epsilon(1e-3));
    CHECK(r.df == 1.0);
    CHECK(r.p_value == Approx(0.024).epsilon(0.05));
    CHECK(r.p_value == Approx(std::erfc(std::sqrt(hand / 2.0))).epsilon(1e-10));
    const auto y = chi_square_2x2(t, true);
    CHECK(y.statistic == Approx(3.0 * 3.0 * (2.0 / 18.5 + 2.0 / 6.5)).epsilon(1e-12));
  }

  TEST_CASE("equal rows give zero and p = 1") {
    const auto r = chi_square_2x2(Table2x2{{{7, 3}, {7, 3}}}, false);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
  }

  TEST_CASE("zero expected count is an error") {
    CHECK_THROWS_AS(chi_square_2x2(Table2x2{{{0, 5}, {0, 5}}}, false), StatError);
  }
}

TEST_SUITE("analytics.permutation") {
  TEST_CASE("parallel kernel equals the serial reference") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
      const auto t = oracle::random_table(rng, 40);
      for (std::uint64_t draws : {1ULL, 4095ULL, 4096ULL, 4097ULL, 30000ULL}) {
        const auto s = permutation_chi_square_serial(t, draws, 17 + trial, trial % 2 == 0);
        const auto p = permutation_chi_square_parallel(t, draws, 17 + trial, trial % 2 == 0);
        CHECK(s.extreme == p.extreme);
        CHECK(s.draws == draws);
        CHECK(s.p_value == p.p_value);
      }
    }
  }

  TEST_CASE("seed changes the draws, same seed repeats them") {
    const Table2x2 t{{{6, 4}, {3, 7}}};
    const auto a = permutation_chi_square_serial(t, 20000, 1);
    CHECK(permutation_chi_square_serial(t, 20000, 1).extreme == a.extreme);
    CHECK(permutation_chi_square_serial(t, 20000, 2).extreme != a.extreme);
  }

  TEST_CASE("converges to the exact permutation distribution") {
    // Under fixed margins the permutation distribution of the top-left count
    // is hypergeometric; the exact permutation p is the Fisher-style sum over
    // counts whose statistic is at least the observed one.
    const Table2x2 t{{{22, 3}, {15, 10}}};
    const auto r = permutation_chi_square_serial(t, 200000, 3);
    double exact = 0.0;
    const double obs = chi_square_statistic(t, false);
    for (std::int64_t x = 12; x <= 25; ++x) {
      const Table2x2 u{{{x, 25 - x}, {37 - x, x - 12}}};
      if (chi_square_statistic(u, false) >= obs - 1e-9) {
        exact += static_cast<double>(static_cast<long double>(oracle::binomial(25, x) * oracle::binomial(25, 37 - x)) /
                                     static_cast<long double>(oracle::binomial(50, 37)));
      }
    }
    CHECK(std::abs(r.p_value - exact) < 0.005);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(permutation_chi_square_serial(Table2x2{{{0, 0}, {1, 1}}}, 10, 1), StatError);
    CHECK_THROWS_AS(permutation_chi_square_parallel(Table2x2{{{1, 1}, {1, 1}}}, 0, 1), StatError);
  }
}

TEST_SUITE("analytics.cohort") {
  TEST_CASE("simulation is seed-stable and sized per arm") {
    const auto spec = default_cohort_spec(25);
    const auto a = simulate_cohort(spec, 42);
    CHECK(a == simulate_cohort(spec, 42));
    CHECK(a != simulate_cohort(spec, 43));
    REQUIRE(a.size() == 50);
    CHECK(std::count_if(a.begin(), a.end(), [](const auto& r) { return r.arm == Arm::kMr; }) == 25);
    CHECK(a.front().id == "mr-001");
    CHECK(a.back().id == "ctl-025");
    for (const auto& r : a) {
      for (double s : {r.stai_baseline, r.stai_prescan, r.stai_postscan}) {
        CHECK(s >= 20.0);
        CHECK(s <= 80.0);
        CHECK(s == std::round(s));
      }
      CHECK(r.satisfaction >= 1);
      CHECK(r.satisfaction <= 5);
    }
  }

  TEST_CASE("sample mean stays within two standard errors in at least 95% of seeds") {
    auto spec = default_cohort_spec(25);
    spec.mr.mean = {34.8, 34.8, 34.8};
    int inside = 0;
    const int seeds = 400;
    for (int seed = 0; seed < seeds; ++seed) {
      const auto rows = simulate_cohort(spec, static_cast<std::uint64_t>(seed));
      double sum = 0.0;
      for (int i = 0; i < 25; ++i) sum += rows[static_cast<std::size_t>(i)].stai_prescan;
      inside += std::abs(sum / 25.0 - 34.8) <= 3.6 ? 1 : 0;
    }
    CHECK(inside >= 0.95 * seeds);
  }

  TEST_CASE("invalid parameters") {
    auto spec = default_cohort_spec();
    spec.mr.sd[1] = 0.0;
    CHECK_THROWS_AS(simulate_cohort(spec, 1), CohortFormatError);
    spec = default_cohort_spec(1);
    CHECK_THROWS_AS(simulate_cohort(spec, 1), CohortFormatError);
    spec = default_cohort_spec();
    spec.control.p_sedative = 1.5;
    CHECK_THROWS_AS(simulate_cohort(spec, 1), CohortFormatError);
  }

  TEST_CASE("parameter overrides from JSON") {
    const auto spec = cohort_spec_from_json(nlohmann::json::parse(R"({"mr": {"n": 10, "sd": [5, 6, 7]}})"), 25);
    CHECK(spec.mr.n == 10);
    CHECK(spec.mr.sd[2] == 7.0);
    CHECK(spec.control.n == 25);
    CHECK_THROWS_AS(cohort_spec_from_json(nlohmann::json::parse(R"({"mr": {"nn": 1}})")), CohortFormatError);
    CHECK_THROWS_AS(cohort_spec_from_json(nlohmann::json::parse(R"({"treatment": {}})")), CohortFormatError);
    CHECK_THROWS_AS(cohort_spec_from_json(nlohmann::json::parse(R"({"mr": {"mean": [1, 2]}})")), CohortFormatError);
  }

  TEST_CASE("CSV round trip") {
    const auto rows = simulate_cohort(default_cohort_spec(8), 9);
    std::stringstream ss;
    write_cohort_csv(ss, rows);
    CHECK(read_cohort_csv(ss) == rows);
  }

  TEST_CASE("CSV accepts any column order and fractional scores") {
    std::istringstream in(
        "arm,id,satisfaction,stai_baseline,stai_prescan,stai_postscan,breath_hold_first_try,scan_paused,sedative_given\n"
        "control,c1,4,45.5,40,39,1,0,no\n");
    const auto rows = read_cohort_csv(in);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].arm == Arm::kControl);
    CHECK(rows[0].stai_baseline == 45.5);
    CHECK(rows[0].breath_hold_first_try);
    CHECK_FALSE(rows[0].sedative_given);
  }

  TEST_CASE("CSV errors name the problem") {
    auto error_of = [](const std::string& text) {
      std::istringstream in(text);
      try {
        read_cohort_csv(in);
      } catch (const CohortFormatError& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    const std::string header =
        "id,arm,stai_baseline,stai_prescan,stai_postscan,breath_hold_first_try,scan_paused,sedative_given,satisfaction\n";
    CHECK(error_of("id,arm,stai_baseline,stai_prescan,stai_postscan,breath_hold_first_try,scan_paused,satisfaction\n")
              .find("sedative_given") != std::string::npos);
    CHECK(error_of("") .find("empty") != std::string::npos);
    CHECK(error_of(header + "a,mr,90,30,30,true,false,false,3\n").find("stai_baseline") != std::string::npos);
    CHECK(error_of(header + "a,vr,40,30,30,true,false,false,3\n").find("arm") != std::string::npos);
    CHECK(error_of(header + "a,mr,40,30,30,maybe,false,false,3\n").find("breath_hold_first_try") != std::string::npos);
    CHECK(error_of(header + "a,mr,40,30,30,true,false,false,6\n").find("satisfaction") != std::string::npos);
    CHECK(error_of(header + "a,mr,40,30,30,true,false\n").find("line 2") != std::string::npos);
    CHECK(error_of(header + "a,mr,40,30,30,true,false,false,3\na,mr,40,30,30,true,false,false,3\n")
              .find("duplicate") != std::string::npos);
    CHECK(error_of(header + "a,mr,4o,30,30,true,false,false,3\n").find("expected a number") != std::string::npos);
    CHECK_THROWS_AS(read_cohort_csv_file("/nonexistent/cohort.csv"), rehearsal::IoError);
  }

  TEST_CASE("report on the reported-counts fixture") {
    const auto report = cohort_report(load("cohort_reported_counts.csv"));
    CHECK(report.mr.n == 25);
    CHECK(report.control.n == 25);
    CHECK(report.mr.mean[kBaseline] == Approx(46.2));
    CHECK(report.control.mean[kBaseline] == Approx(45.5));
    CHECK(report.mr.mean[kPrescan] == Approx(34.8));
    CHECK(report.control.mean[kPrescan] == Approx(41.6));
    CHECK(report.mr.breath_hold_first_try == 22);
    CHECK(report.control.breath_hold_first_try == 15);
    CHECK(report.mr.scan_paused == 0);
    CHECK(report.control.scan_paused == 2);
    CHECK(report.mr.sedative_given == 0);
    CHECK(report.control.sedative_given == 3);
    CHECK(report.mr.prescan_below_fraction == Approx(0.80));
    CHECK(report.control.prescan_below_fraction == Approx(0.40));
    CHECK(report.mr.satisfaction_good == 24);
    CHECK(report.control.satisfaction_good == 18);

    const auto& fisher = report.test("fisher_scan_paused");
    CHECK(fisher.result.p_value == Approx(0.2449).epsilon(1e-3));
    CHECK(*fisher.p_two_sided == Approx(0.4898).epsilon(1e-3));
    CHECK(report.test("chi_square_breath_hold").result.p_value < 0.05);
    CHECK(report.test("baseline_unpaired_t").result.p_value == Approx(0.78).epsilon(0.03));
    CHECK(*report.test("prescan_unpaired_t").result.effect_size == Approx(0.7).epsilon(0.03));
    CHECK(report.test("paired_mr").result.p_value < 0.001);

    const auto j = to_json(report);
    CHECK(j["fisher_sidedness"] == "one-sided");
    CHECK(j["arms"][1]["sedative_given"] == 3);
    CHECK(j["tests"].size() == report.tests.size());
    const auto text = to_text(report);
    CHECK(text.find("sedative given") != std::string::npos);
    CHECK(text.find("fisher_scan_paused") != std::string::npos);
    CHECK(text.find("no reference value") != std::string::npos);
  }

  TEST_CASE("two-sided Fisher on request") {
    const auto report = cohort_report(load("cohort_reported_counts.csv"), Sidedness::kTwo);
    CHECK(report.test("fisher_scan_paused").result.p_value == Approx(0.4898).epsilon(1e-3));
  }

  TEST_CASE("identical arms give p = 1 everywhere and d = 0") {
    const auto report = cohort_report(load("cohort_identical_arms.csv"));
    for (const auto& t : report.tests) {
      INFO(t.name);
      REQUIRE(t.computable);
      CHECK(t.result.p_value == Approx(1.0).epsilon(1e-12));
      if (t.result.effect_size) CHECK(*t.result.effect_size == 0.0);
    }
  }

  TEST_CASE("single arm is an error") {
    auto rows = load("cohort_reported_counts.csv");
    rows.erase(std::remove_if(rows.begin(), rows.end(), [](const auto& r) { return r.arm == Arm::kControl; }),
               rows.end());
    CHECK_THROWS_AS(cohort_report(rows), CohortFormatError);
  }

  TEST_CASE("degenerate tests are reported, not thrown") {
    auto rows = load("cohort_identical_arms.csv");
    for (auto& r : rows) r.scan_paused = false;
    const auto report = cohort_report(rows);
    CHECK_FALSE(report.test("fisher_scan_paused").computable);
    CHECK(to_json(report)["tests"][5]["reason"].is_string());
    CHECK(to_text(report).find("not computable") != std::string::npos);
  }
}
