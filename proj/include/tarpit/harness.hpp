#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tarpit/driver.hpp"
#include "tarpit/report.hpp"

namespace tarpit {

// ---------------------------------------------------------------------------
// Worked two-page trap arithmetic and its Monte-Carlo counterparts.
// ---------------------------------------------------------------------------

struct TrapAnalysis {
  int space_b = 0;         // action-space size of the trap page
  int space_c = 0;         // action-space size of the follow-up page
  int exits_b = 0;         // events that leave the trap page
  int window = 0;          // consecutive events considered
  double stay_probability = 0.0;   // (space_b - exits_b) / space_b
  double trapped_fraction = 0.0;   // stay_probability ^ window
  double crash_probability = 0.0;  // 1 / (space_b * space_c)
};

TrapAnalysis analytic_trap_values(int space_b, int space_c, int exits_b, int window);

struct McEstimate {
  long trials = 0;
  long hits = 0;
  double fraction() const { return trials > 0 ? static_cast<double>(hits) / trials : 0.0; }
};

// 95% normal-approximation binomial confidence half-width around p.
double binomial_ci95(double p, long trials);

struct WalkExperiment {
  std::string start_screen;
  std::vector<FlagSet> start_flags;
  int events = 8;
};

// Random walks of `events` uniform events per trial. A trial counts as a hit
// when every adjacent state pair (including the pair with the start state)
// stays similar at theta — i.e. the walk never left the starting look.
McEstimate mc_all_similar(const AppModel& app, const WalkExperiment& walk, long trials,
                          std::uint64_t seed, double theta = 0.95);

// A trial counts as a hit when any of its events crashed the app.
McEstimate mc_crash_within(const AppModel& app, const WalkExperiment& walk, long trials,
                           std::uint64_t seed);

struct TwoPageTrapCheck {
  TrapAnalysis analytic;
  McEstimate trapped;
  McEstimate crash;
  double trapped_tolerance = 0.02;
  bool trapped_ok = false;
  bool crash_ok = false;  // inside the 95% CI of the analytic value
  std::string text;       // printable transcript of the whole check
  bool ok() const { return trapped_ok && crash_ok; }
};

// Runs the full worked-example reproduction on motivating_example().
TwoPageTrapCheck check_two_page_trap(long trapped_trials, long crash_trials,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Events-to-first-crash experiment.
// ---------------------------------------------------------------------------

struct FirstCrashResult {
  Mode mode = Mode::kHybrid;
  std::vector<long> events_per_seed;  // events to first crash; censored runs
                                      // report the events actually executed
  long crashed_seeds = 0;
  double median_events = 0.0;
};

FirstCrashResult first_crash_experiment(const AppModel& app, Mode mode,
                                        std::uint64_t first_seed, int n_seeds,
                                        long event_budget,
                                        const AdvisorFactory& factory);

// ---------------------------------------------------------------------------
// Mode x seed x app comparison grid.
// ---------------------------------------------------------------------------

struct CellResult {
  std::string scenario;
  Mode mode = Mode::kHybrid;
  std::uint64_t seed = 0;
  CampaignReport report;
  Metrics metrics;
  std::size_t memory_records = 0;
  std::string error;  // non-empty when the cell failed
  bool failed() const { return !error.empty(); }
};

struct ComparisonResult {
  std::vector<CellResult> cells;  // app-major, then mode, then seed
  bool any_failed() const;
};

// Runs every (app, mode, seed) campaign on a pool of `jobs` workers; cells
// share nothing, and results come back in grid order regardless of timing.
ComparisonResult run_comparison(const std::vector<AppModel>& apps,
                                const std::vector<Mode>& modes,
                                const std::vector<std::uint64_t>& seeds,
                                const CampaignConfig& base,
                                const AdvisorFactory& factory, int jobs = 1);

struct AggregateStats {
  int n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

// Linear-interpolation quantiles over the defined values.
AggregateStats aggregate(std::vector<double> values);

struct ModeAggregate {
  std::string mode;
  AggregateStats screen_coverage;
  AggregateStats unique_crashes;
  AggregateStats escape_success;
  AggregateStats first_attempt;
  AggregateStats time_in_tarpit;
};

std::vector<ModeAggregate> aggregate_by_mode(const ComparisonResult& result);
std::string comparison_text(const std::vector<ModeAggregate>& aggregates);

// Deterministic family of generated benchmark apps, seeds base..base+n-1.
std::vector<AppModel> make_benchmark_suite(int n_apps, int n_screens,
                                           double tarpit_factor,
                                           std::uint64_t base_seed);

}  // namespace tarpit
