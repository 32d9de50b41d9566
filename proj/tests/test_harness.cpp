#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tarpit/harness.hpp"
#include "tarpit/scenario.hpp"

using namespace tarpit;

namespace {

AdvisorFactory oracle_factory(double epsilon = 0.0) {
  return [epsilon](const AppRuntime& rt, std::uint64_t seed) {
    return std::make_unique<OracleAdvisor>(rt, epsilon, seed);
  };
}

}  // namespace

TEST_CASE("trap arithmetic reproduces the worked example") {
  const TrapAnalysis a = analytic_trap_values(70, 80, 2, 8);
  CHECK(a.stay_probability == doctest::Approx(68.0 / 70.0));
  CHECK(a.trapped_fraction == doctest::Approx(0.79297).epsilon(1e-4));
  CHECK(a.crash_probability == doctest::Approx(1.786e-4).epsilon(1e-3));
  CHECK_THROWS_AS(analytic_trap_values(0, 80, 2, 8), std::invalid_argument);
  CHECK_THROWS_AS(analytic_trap_values(70, 80, 71, 8), std::invalid_argument);
  CHECK_THROWS_AS(analytic_trap_values(70, 80, 2, 0), std::invalid_argument);
}

TEST_CASE("binomial confidence width shrinks with the sample") {
  CHECK(binomial_ci95(0.5, 100) == doctest::Approx(1.96 * 0.05));
  CHECK(binomial_ci95(0.5, 10000) < binomial_ci95(0.5, 100));
  CHECK(binomial_ci95(0.5, 0) == 0.0);
}

TEST_CASE("similar-walk and crash-walk estimates straddle their analytic values") {
  const AppModel app = motivating_example();
  const std::vector<FlagSet> armed = {{"multi_select", -1}};

  const McEstimate trapped = mc_all_similar(
      app, {.start_screen = "preview", .start_flags = armed, .events = 8}, 4000, 11);
  CHECK(trapped.trials == 4000);
  CHECK(trapped.fraction() == doctest::Approx(0.793).epsilon(0.04));

  // Two events, so a hit needs subscribe-then-back exactly: p = 1/5600.
  const McEstimate crash = mc_crash_within(
      app, {.start_screen = "preview", .start_flags = armed, .events = 2}, 200000, 12);
  CHECK(crash.fraction() > 0.5 / 5600);
  CHECK(crash.fraction() < 2.0 / 5600);

  // Determinism.
  const McEstimate again = mc_all_similar(
      app, {.start_screen = "preview", .start_flags = armed, .events = 8}, 4000, 11);
  CHECK(again.hits == trapped.hits);
}

TEST_CASE("the full worked-example check passes and prints its transcript") {
  const TwoPageTrapCheck check = check_two_page_trap(4000, 200000, 5);
  CHECK(check.analytic.space_b == 70);
  CHECK(check.analytic.space_c == 80);
  CHECK(check.analytic.exits_b == 2);
  CHECK(check.trapped_ok);
  CHECK(check.crash_ok);
  CHECK(check.ok());
  CHECK(check.text.find("0.7930") != std::string::npos);
  CHECK(check.text.find("1.786e-04") != std::string::npos);
  CHECK(check.text.find("PASS") != std::string::npos);
  CHECK(check.text.find("FAIL") == std::string::npos);
}

TEST_CASE("first-crash experiment reports per-seed events and a median") {
  const AppModel app = motivating_example();
  const FirstCrashResult hybrid =
      first_crash_experiment(app, Mode::kHybrid, 100, 20, 5000, oracle_factory());
  REQUIRE(hybrid.events_per_seed.size() == 20);
  CHECK(hybrid.crashed_seeds == 20);  // the guided path always reaches the crash
  CHECK(hybrid.median_events > 8);    // needs at least a detection window
  CHECK(hybrid.median_events < 500);

  const FirstCrashResult random =
      first_crash_experiment(app, Mode::kRandomOnly, 100, 20, 1500, {});
  REQUIRE(random.events_per_seed.size() == 20);
  CHECK(random.crashed_seeds < 20);  // most 1,500-event random runs stay crash-free
  for (long v : random.events_per_seed) CHECK(v <= 1500);
  CHECK(hybrid.median_events < random.median_events);
}

TEST_CASE("quantile aggregation matches hand-computed values") {
  const AggregateStats empty = aggregate({});
  CHECK(empty.n == 0);
  CHECK(empty.median == 0.0);

  const AggregateStats one = aggregate({3.5});
  CHECK(one.median == 3.5);
  CHECK(one.q1 == 3.5);
  CHECK(one.q3 == 3.5);

  const AggregateStats five = aggregate({5, 1, 3, 2, 4});
  CHECK(five.median == 3.0);
  CHECK(five.q1 == 2.0);
  CHECK(five.q3 == 4.0);

  const AggregateStats four = aggregate({1, 2, 3, 4});
  CHECK(four.median == 2.5);
  CHECK(four.q1 == doctest::Approx(1.75));
  CHECK(four.q3 == doctest::Approx(3.25));
}

TEST_CASE("benchmark suite generation is deterministic and seed-distinct") {
  const std::vector<AppModel> a = make_benchmark_suite(3, 12, 0.85, 900);
  const std::vector<AppModel> b = make_benchmark_suite(3, 12, 0.85, 900);
  REQUIRE(a.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(scenario_to_json(a[i]) == scenario_to_json(b[i]));
  }
  CHECK(a[0].name != a[1].name);
  CHECK(scenario_to_json(a[0]) != scenario_to_json(a[1]));
  CHECK_THROWS_AS(make_benchmark_suite(0, 12, 0.85, 1), std::invalid_argument);
}

TEST_CASE("comparison grids come back in order, identically for any job count") {
  const std::vector<AppModel> apps = make_benchmark_suite(2, 8, 0.5, 321);
  const std::vector<Mode> modes = {Mode::kHybrid, Mode::kNoLlm};
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  CampaignConfig base;
  base.event_budget = 400;

  const ComparisonResult serial = run_comparison(apps, modes, seeds, base,
                                                 oracle_factory(0.5), 1);
  const ComparisonResult parallel = run_comparison(apps, modes, seeds, base,
                                                   oracle_factory(0.5), 4);
  REQUIRE(serial.cells.size() == 12);
  REQUIRE(parallel.cells.size() == 12);
  CHECK_FALSE(serial.any_failed());

  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    const CellResult& s = serial.cells[i];
    const CellResult& p = parallel.cells[i];
    CHECK(s.scenario == p.scenario);
    CHECK(s.mode == p.mode);
    CHECK(s.seed == p.seed);
    CHECK(report_to_json(s.report) == report_to_json(p.report));
  }

  // Grid order: app-major, then mode, then seed.
  CHECK(serial.cells[0].scenario == apps[0].name);
  CHECK(serial.cells[0].mode == Mode::kHybrid);
  CHECK(serial.cells[0].seed == 1);
  CHECK(serial.cells[2].seed == 3);
  CHECK(serial.cells[3].mode == Mode::kNoLlm);
  CHECK(serial.cells[6].scenario == apps[1].name);

  CHECK_THROWS_AS(run_comparison({}, modes, seeds, base, oracle_factory(), 1),
                  std::invalid_argument);
}

TEST_CASE("cell failures are captured without sinking the grid") {
  const std::vector<AppModel> apps = make_benchmark_suite(1, 6, 0.5, 77);
  CampaignConfig base;
  base.event_budget = 200;
  // Escape modes need an advisor; passing none fails those cells only.
  const ComparisonResult res = run_comparison(apps, {Mode::kHybrid, Mode::kNoLlm}, {1, 2},
                                              base, {}, 1);
  REQUIRE(res.cells.size() == 4);
  CHECK(res.any_failed());
  CHECK(res.cells[0].failed());
  CHECK(res.cells[0].error.find("advisor") != std::string::npos);
  CHECK_FALSE(res.cells[2].failed());

  const auto aggs = aggregate_by_mode(res);
  REQUIRE(aggs.size() == 1);  // only the passive mode has usable cells
  CHECK(aggs[0].mode == "no_llm");
  CHECK(aggs[0].screen_coverage.n == 2);

  const std::string text = comparison_text(aggs);
  CHECK(text.find("no_llm") != std::string::npos);
}

TEST_CASE("ablation ordering holds on a reduced grid") {
  // Scaled-down version of the full comparison: 3 apps x 3 seeds.
  const std::vector<AppModel> apps = make_benchmark_suite(3, 64, 0.85, 5000);
  CampaignConfig base;
  base.event_budget = 5000;
  const ComparisonResult res =
      run_comparison(apps, {Mode::kHybrid, Mode::kNoReuse, Mode::kNoLlm}, {1, 2, 3}, base,
                     oracle_factory(0.92), 1);
  REQUIRE_FALSE(res.any_failed());
  const auto aggs = aggregate_by_mode(res);
  REQUIRE(aggs.size() == 3);
  double hybrid = 0, no_reuse = 0, no_llm = 0;
  for (const auto& a : aggs) {
    if (a.mode == "hybrid") hybrid = a.screen_coverage.median;
    if (a.mode == "no_reuse") no_reuse = a.screen_coverage.median;
    if (a.mode == "no_llm") no_llm = a.screen_coverage.median;
  }
  CHECK(hybrid > no_reuse);
  CHECK(no_reuse > no_llm);
  CHECK(hybrid >= 1.2 * no_llm);
}
