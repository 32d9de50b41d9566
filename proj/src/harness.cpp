#include "tarpit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <thread>

#include "tarpit/scenario.hpp"

namespace tarpit {
namespace {

std::string sfmt(const char* fmt, ...) {
  char buf[256];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

// Hash memo shared across trials; the simulator reuses one bitmap per
// (screen, strip tone), so only a handful of distinct buffers ever appear.
class HashCache {
 public:
  PHash get(const UiState& state) {
    const Bitmap* key = state.screenshot.get();
    auto [it, inserted] = memo_.try_emplace(key);
    if (inserted) it->second = dhash(*key);
    return it->second;
  }

 private:
  std::map<const Bitmap*, PHash> memo_;
};

class SpaceCache {
 public:
  const ActionSpace& get(const UiState& state) {
    auto [it, inserted] = memo_.try_emplace(state.widgets.get());
    if (inserted) it->second = build_action_space(state);
    return it->second;
  }

 private:
  std::map<const std::vector<Widget>*, ActionSpace> memo_;
};

}  // namespace

TrapAnalysis analytic_trap_values(int space_b, int space_c, int exits_b, int window) {
  if (space_b < 1 || space_c < 1 || exits_b < 0 || exits_b > space_b || window < 1) {
    throw std::invalid_argument("invalid trap arithmetic inputs");
  }
  TrapAnalysis a;
  a.space_b = space_b;
  a.space_c = space_c;
  a.exits_b = exits_b;
  a.window = window;
  a.stay_probability = static_cast<double>(space_b - exits_b) / space_b;
  a.trapped_fraction = std::pow(a.stay_probability, window);
  a.crash_probability = 1.0 / (static_cast<double>(space_b) * space_c);
  return a;
}

double binomial_ci95(double p, long trials) {
  if (trials <= 0) return 0.0;
  return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

McEstimate mc_all_similar(const AppModel& app, const WalkExperiment& walk, long trials,
                          std::uint64_t seed, double theta) {
  AppRuntime rt(app, {.start_screen = walk.start_screen.empty()
                          ? std::nullopt
                          : std::optional<std::string>(walk.start_screen),
                      .start_flags = walk.start_flags});
  Rng rng(seed);
  HashCache hashes;
  SpaceCache spaces;

  McEstimate est;
  est.trials = trials;
  for (long t = 0; t < trials; ++t) {
    rt.reset();
    PHash prev = hashes.get(rt.current_state());
    bool all_similar = true;
    for (int e = 0; e < walk.events; ++e) {
      const UiEvent ev = pick_random_event(spaces.get(rt.current_state()), rng);
      const StepResult res = rt.execute(ev);
      const PHash h = hashes.get(res.state);
      if (!is_ui_similar(prev, h, theta)) {
        all_similar = false;
        break;
      }
      prev = h;
    }
    est.hits += all_similar;
  }
  return est;
}

McEstimate mc_crash_within(const AppModel& app, const WalkExperiment& walk, long trials,
                           std::uint64_t seed) {
  AppRuntime rt(app, {.start_screen = walk.start_screen.empty()
                          ? std::nullopt
                          : std::optional<std::string>(walk.start_screen),
                      .start_flags = walk.start_flags});
  Rng rng(seed);
  SpaceCache spaces;

  McEstimate est;
  est.trials = trials;
  for (long t = 0; t < trials; ++t) {
    rt.reset();
    for (int e = 0; e < walk.events; ++e) {
      const UiEvent ev = pick_random_event(spaces.get(rt.current_state()), rng);
      if (rt.execute(ev).crashed) {
        ++est.hits;
        break;
      }
    }
  }
  return est;
}

TwoPageTrapCheck check_two_page_trap(long trapped_trials, long crash_trials,
                                     std::uint64_t seed) {
  const AppModel app = motivating_example();
  const std::vector<FlagSet> armed = {{"multi_select", -1}};

  // Probe the two page action spaces by walking the armed subscribe path.
  AppRuntime probe(app, {.start_screen = "preview", .start_flags = armed});
  const ActionSpace space_b = build_action_space(probe.current_state());
  const StepResult onto_c = probe.execute(space_b.at(2));
  if (probe.current_screen_id() != "episode_detail") {
    throw std::logic_error("armed subscribe did not reach the follow-up page");
  }
  const ActionSpace space_c = build_action_space(onto_c.state);
  const int exits_b =
      static_cast<int>(app.find_screen("preview")->escape_actions.size());

  TwoPageTrapCheck check;
  const DetectorConfig detector;
  check.analytic = analytic_trap_values(static_cast<int>(space_b.size()),
                                        static_cast<int>(space_c.size()), exits_b,
                                        detector.window);

  check.trapped = mc_all_similar(
      app, {.start_screen = "preview", .start_flags = armed, .events = detector.window},
      trapped_trials, seed, detector.theta);
  check.crash = mc_crash_within(
      app, {.start_screen = "preview", .start_flags = armed, .events = 2}, crash_trials,
      seed ^ 0x9e3779b97f4a7c15ULL);

  const double trapped_diff =
      std::fabs(check.trapped.fraction() - check.analytic.trapped_fraction);
  check.trapped_ok = trapped_diff <= check.trapped_tolerance;
  const double crash_ci = binomial_ci95(check.analytic.crash_probability, crash_trials);
  const double crash_diff =
      std::fabs(check.crash.fraction() - check.analytic.crash_probability);
  check.crash_ok = crash_diff <= crash_ci;

  std::string text;
  text += sfmt("action space on the trap page: %d events\n", check.analytic.space_b);
  text += sfmt("action space on the follow-up page: %d events\n", check.analytic.space_c);
  text += sfmt("stay probability per event: %d/%d = %.6f\n",
               check.analytic.space_b - check.analytic.exits_b, check.analytic.space_b,
               check.analytic.stay_probability);
  text += sfmt("analytic trapped fraction over %d events: %.4f\n", check.analytic.window,
               check.analytic.trapped_fraction);
  text += sfmt("monte carlo trapped fraction: %.4f  (%ld trials, 95%% CI +-%.4f)\n",
               check.trapped.fraction(), check.trapped.trials,
               binomial_ci95(check.analytic.trapped_fraction, check.trapped.trials));
  text += sfmt("  trapped check: %s  (|diff| = %.4f, tolerance %.4f)\n",
               check.trapped_ok ? "PASS" : "FAIL", trapped_diff, check.trapped_tolerance);
  text += sfmt("analytic two-step crash probability: %.3e\n",
               check.analytic.crash_probability);
  text += sfmt("monte carlo two-step crash probability: %.3e  (%ld trials, 95%% CI +-%.3e)\n",
               check.crash.fraction(), check.crash.trials, crash_ci);
  text += sfmt("  crash check: %s  (|diff| = %.3e, 95%% CI half-width %.3e)\n",
               check.crash_ok ? "PASS" : "FAIL", crash_diff, crash_ci);
  check.text = std::move(text);
  return check;
}

FirstCrashResult first_crash_experiment(const AppModel& app, Mode mode,
                                        std::uint64_t first_seed, int n_seeds,
                                        long event_budget,
                                        const AdvisorFactory& factory) {
  FirstCrashResult result;
  result.mode = mode;
  for (int i = 0; i < n_seeds; ++i) {
    CampaignConfig cfg;
    cfg.mode = mode;
    cfg.seed = first_seed + static_cast<std::uint64_t>(i);
    cfg.event_budget = event_budget;
    cfg.stop_after_first_crash = true;
    const CampaignResult res = run_campaign(app, cfg, factory);
    if (res.report.first_crash_event) {
      result.events_per_seed.push_back(*res.report.first_crash_event + 1);
      ++result.crashed_seeds;
    } else {
      // Censored: the budget ran out crash-free.
      result.events_per_seed.push_back(res.report.events_executed);
    }
  }
  std::vector<double> values(result.events_per_seed.begin(), result.events_per_seed.end());
  result.median_events = aggregate(std::move(values)).median;
  return result;
}

bool ComparisonResult::any_failed() const {
  return std::any_of(cells.begin(), cells.end(),
                     [](const CellResult& c) { return c.failed(); });
}

ComparisonResult run_comparison(const std::vector<AppModel>& apps,
                                const std::vector<Mode>& modes,
                                const std::vector<std::uint64_t>& seeds,
                                const CampaignConfig& base, const AdvisorFactory& factory,
                                int jobs) {
  if (apps.empty() || modes.empty() || seeds.empty()) {
    throw std::invalid_argument("comparison needs at least one app, mode, and seed");
  }
  ComparisonResult result;
  result.cells.resize(apps.size() * modes.size() * seeds.size());

  const auto run_cell = [&](std::size_t index) {
    const std::size_t per_app = modes.size() * seeds.size();
    const AppModel& app = apps[index / per_app];
    const Mode mode = modes[(index % per_app) / seeds.size()];
    const std::uint64_t seed = seeds[index % seeds.size()];

    CellResult& cell = result.cells[index];
    cell.scenario = app.name;
    cell.mode = mode;
    cell.seed = seed;
    try {
      CampaignConfig cfg = base;
      cfg.mode = mode;
      cfg.seed = seed;
      CampaignResult res = run_campaign(app, cfg, factory);
      cell.metrics = compute_metrics(res.report, app);
      cell.memory_records = res.memory.size();
      cell.report = std::move(res.report);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };

  const std::size_t n = result.cells.size();
  const int workers = std::clamp<int>(jobs, 1, static_cast<int>(n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          run_cell(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return result;
}

AggregateStats aggregate(std::vector<double> values) {
  AggregateStats s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double p) {
    const double rank = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (values[lo + 1] - values[lo]) * frac;
  };
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  return s;
}

std::vector<ModeAggregate> aggregate_by_mode(const ComparisonResult& result) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const CellResult*>> by_mode;
  for (const auto& cell : result.cells) {
    if (cell.failed()) continue;
    const std::string mode = to_string(cell.mode);
    if (!by_mode.count(mode)) order.push_back(mode);
    by_mode[mode].push_back(&cell);
  }

  std::vector<ModeAggregate> out;
  for (const auto& mode : order) {
    ModeAggregate agg;
    agg.mode = mode;
    std::vector<double> coverage, crashes, esr, faer, tit;
    for (const CellResult* cell : by_mode[mode]) {
      coverage.push_back(cell->metrics.screen_coverage);
      crashes.push_back(cell->metrics.unique_crashes);
      tit.push_back(cell->metrics.time_in_tarpit);
      if (cell->metrics.escape_success_rate) esr.push_back(*cell->metrics.escape_success_rate);
      if (cell->metrics.first_attempt_escape_rate)
        faer.push_back(*cell->metrics.first_attempt_escape_rate);
    }
    agg.screen_coverage = aggregate(std::move(coverage));
    agg.unique_crashes = aggregate(std::move(crashes));
    agg.escape_success = aggregate(std::move(esr));
    agg.first_attempt = aggregate(std::move(faer));
    agg.time_in_tarpit = aggregate(std::move(tit));
    out.push_back(std::move(agg));
  }
  return out;
}

std::string comparison_text(const std::vector<ModeAggregate>& aggregates) {
  std::string text =
      "mode         cells  coverage median [q1, q3]      crashes  ESR     FAER    "
      "time-in-tarpit\n";
  for (const auto& a : aggregates) {
    const auto opt = [](const AggregateStats& s) {
      return s.n > 0 ? sfmt("%.3f", s.median) : std::string("na");
    };
    text += sfmt("%-12s %-6d %.4f [%.4f, %.4f]     %-8.1f %-7s %-7s %s\n", a.mode.c_str(),
                 a.screen_coverage.n, a.screen_coverage.median, a.screen_coverage.q1,
                 a.screen_coverage.q3, a.unique_crashes.median, opt(a.escape_success).c_str(),
                 opt(a.first_attempt).c_str(), opt(a.time_in_tarpit).c_str());
  }
  return text;
}

std::vector<AppModel> make_benchmark_suite(int n_apps, int n_screens, double tarpit_factor,
                                           std::uint64_t base_seed) {
  if (n_apps < 1) throw std::invalid_argument("need at least one app");
  std::vector<AppModel> apps;
  apps.reserve(n_apps);
  for (int i = 0; i < n_apps; ++i) {
    BenchmarkParams params;
    params.n_screens = n_screens;
    params.tarpit_factor = tarpit_factor;
    params.seed = base_seed + static_cast<std::uint64_t>(i);
    apps.push_back(generate_benchmark(params));
  }
  return apps;
}

}  // namespace tarpit
