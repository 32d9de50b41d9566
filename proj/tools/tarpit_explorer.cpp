// Command-line front end: runs exploration campaigns against simulated apps,
// reproduces the two-page trap arithmetic, compares modes over a grid, and
// generates synthetic benchmark scenarios.
//
// Exit codes: 0 success, 1 bad flags or failed check, 2 scenario errors,
// 3 advisor configuration or transport errors, 4 partial comparison failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tarpit/advisor.hpp"
#include "tarpit/driver.hpp"
#include "tarpit/harness.hpp"
#include "tarpit/report.hpp"
#include "tarpit/scenario.hpp"

namespace fs = std::filesystem;
using namespace tarpit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitScenario = 2;
constexpr int kExitAdvisor = 3;
constexpr int kExitPartial = 4;

// Options shared by `run` and `compare`.
struct AdvisorOptions {
  std::string kind = "oracle";
  double oracle_epsilon = 0.0;
  std::string llm_endpoint;
  std::string llm_model = "gpt-4o-mini";
  std::string cassette;         // replay source
  std::string script_file;      // scripted responses, one per line
  std::string record_cassette;  // where `run` saves recorded exchanges
};

std::vector<std::string> read_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AdvisorError("cannot open script file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.empty()) throw AdvisorError("script file is empty: " + path);
  return lines;
}

// Validates advisor flags up front so misconfiguration fails before any
// campaign work starts.
void check_advisor_options(const AdvisorOptions& opt) {
  if (opt.kind == "http" && opt.llm_endpoint.empty())
    throw AdvisorError("--advisor http requires --llm-endpoint");
  if (opt.kind == "replay" && opt.cassette.empty())
    throw AdvisorError("--advisor replay requires --cassette");
  if (opt.kind == "scripted" && opt.script_file.empty())
    throw AdvisorError("--advisor scripted requires --script-file");
  if (opt.kind == "replay") load_cassette(opt.cassette);  // fail early if unreadable
  if (opt.kind == "scripted") read_script(opt.script_file);
}

AdvisorFactory make_advisor_factory(const AdvisorOptions& opt) {
  check_advisor_options(opt);
  if (opt.kind == "oracle") {
    const double eps = opt.oracle_epsilon;
    return [eps](const AppRuntime& rt, std::uint64_t seed) -> std::unique_ptr<Advisor> {
      return std::make_unique<OracleAdvisor>(rt, eps, seed);
    };
  }
  if (opt.kind == "scripted") {
    const auto lines = read_script(opt.script_file);
    return [lines](const AppRuntime&, std::uint64_t) -> std::unique_ptr<Advisor> {
      return std::make_unique<ScriptedAdvisor>(lines);
    };
  }
  if (opt.kind == "http") {
    HttpAdvisorConfig cfg;
    cfg.endpoint = opt.llm_endpoint;
    cfg.model = opt.llm_model;
    return [cfg](const AppRuntime&, std::uint64_t) -> std::unique_ptr<Advisor> {
      return std::make_unique<HttpChatAdvisor>(cfg);
    };
  }
  if (opt.kind == "replay") {
    const std::string path = opt.cassette;
    return [path](const AppRuntime&, std::uint64_t) -> std::unique_ptr<Advisor> {
      return std::make_unique<ReplayAdvisor>(path);
    };
  }
  throw AdvisorError("unknown advisor kind: " + opt.kind);
}

// Wraps a factory so every produced advisor records its exchanges into a
// shared cassette saved after the campaign.
struct RecordingBundle {
  std::vector<std::unique_ptr<Advisor>> inners;
  std::vector<std::unique_ptr<CassetteRecorder>> recorders;

  void save(const fs::path& path) const {
    std::vector<CassetteEntry> all;
    for (const auto& r : recorders)
      all.insert(all.end(), r->entries().begin(), r->entries().end());
    save_cassette(all, path);
  }
};

// Hands the campaign an advisor view whose recorder (and the advisor behind
// it) stays alive in the bundle.
struct RecorderProxy : Advisor {
  CassetteRecorder* rec;
  explicit RecorderProxy(CassetteRecorder* r) : rec(r) {}
  std::string name() const override { return rec->name(); }
  std::string suggest(const Prompt& p) override { return rec->suggest(p); }
};

AppModel load_model(const std::string& scenario) {
  if (scenario == "motivating" && !fs::exists(scenario)) return motivating_example();
  return load_scenario(scenario);
}

Mode parse_mode(const std::string& s) {
  const auto m = mode_from_string(s);
  if (!m) throw CLI::ValidationError("--mode", "unknown mode: " + s);
  return *m;
}

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

void print_run_summary(const CampaignReport& report, const Metrics& m,
                       std::size_t memory_records) {
  std::printf("scenario            %s\n", report.scenario_name.c_str());
  std::printf("mode                %s\n", to_string(report.mode));
  std::printf("seed                %llu\n",
              static_cast<unsigned long long>(report.seed));
  std::printf("events executed     %ld / %ld\n", m.events_executed, report.event_budget);
  std::printf("unique screens      %d (coverage %.3f)\n", m.unique_screens,
              m.screen_coverage);
  std::printf("unique transitions  %d\n", m.unique_transitions);
  std::printf("episodes            %d (escaped %d)\n", m.episodes, m.escaped_episodes);
  std::printf("escape success      %s\n", format_optional(m.escape_success_rate).c_str());
  std::printf("first-attempt rate  %s\n",
              format_optional(m.first_attempt_escape_rate).c_str());
  std::printf("detection precision %s\n",
              format_optional(m.tarpit_detection_precision).c_str());
  std::printf("time in tarpit      %.3f\n", m.time_in_tarpit);
  std::printf("crashes             %d unique / %d total\n", m.unique_crashes,
              m.total_crashes);
  if (m.first_crash_event)
    std::printf("first crash         event %ld\n", *m.first_crash_event);
  std::printf("advisor queries     %ld\n", m.advisor_queries);
  std::printf("memory records      %zu\n", memory_records);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string scenario;
  std::string mode = "hybrid";
  AdvisorOptions advisor;
  std::uint64_t seed = 0;
  long budget = 5000;
  std::string out_dir = "out";
  std::optional<std::string> start_screen;
  bool stop_after_first_crash = false;
  std::optional<double> time_budget;
};

int cmd_run(const RunOptions& opt) {
  const AppModel model = load_model(opt.scenario);

  CampaignConfig config;
  config.mode = parse_mode(opt.mode);
  config.seed = opt.seed;
  config.event_budget = opt.budget;
  config.start_screen = opt.start_screen;
  config.stop_after_first_crash = opt.stop_after_first_crash;
  config.time_budget_seconds = opt.time_budget;

  const bool needs_advisor =
      config.mode == Mode::kHybrid || config.mode == Mode::kNoReuse;
  AdvisorFactory factory;
  auto recording = std::make_shared<RecordingBundle>();
  if (needs_advisor) {
    factory = make_advisor_factory(opt.advisor);
    if (!opt.advisor.record_cassette.empty()) {
      const AdvisorFactory inner = factory;
      factory = [inner, recording](const AppRuntime& rt,
                                   std::uint64_t seed) -> std::unique_ptr<Advisor> {
        recording->inners.push_back(inner(rt, seed));
        recording->recorders.push_back(
            std::make_unique<CassetteRecorder>(*recording->inners.back()));
        return std::make_unique<RecorderProxy>(recording->recorders.back().get());
      };
    }
  }

  const CampaignResult result = run_campaign(model, config, factory);
  const Metrics metrics = compute_metrics(result.report, model);

  fs::create_directories(opt.out_dir);
  const fs::path out(opt.out_dir);
  write_report_json(out / "report.json", result.report);
  write_trace_csv(out / "trace.csv", result.report);
  write_summary_csv(out / "summary.csv",
                    {make_summary_row(result.report, metrics,
                                      result.memory.records().size())});
  write_curves_svg(out / "curves.svg",
                   model.name + " coverage",
                   {coverage_curve(result.report, to_string(config.mode))});
  result.memory.save((out / "memory.json").string());
  if (needs_advisor && !opt.advisor.record_cassette.empty())
    recording->save(opt.advisor.record_cassette);

  print_run_summary(result.report, metrics, result.memory.records().size());
  std::printf("outputs             %s\n", out.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reproduce-sec22
// ---------------------------------------------------------------------------

struct ReproduceOptions {
  long trials = 10000;
  long crash_trials = 1000000;
  std::uint64_t seed = 42;
};

int cmd_reproduce_sec22(const ReproduceOptions& opt) {
  const TwoPageTrapCheck check = check_two_page_trap(opt.trials, opt.crash_trials,
                                                     opt.seed);
  std::fputs(check.text.c_str(), stdout);
  return check.ok() ? kExitOk : kExitUsage;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareOptions {
  std::vector<std::string> scenarios;
  int apps = 0;  // >0: generate a suite instead of loading files
  int screens = 12;
  double tarpit_factor = 0.85;
  std::uint64_t suite_seed = 0;
  std::vector<std::string> modes;
  std::vector<std::uint64_t> seeds;
  int seed_count = 5;
  AdvisorOptions advisor;
  long budget = 5000;
  std::string out_dir = "out";
  int jobs = 0;
  std::optional<double> time_budget;
};

std::string cell_dir_name(const CellResult& cell) {
  return std::string(to_string(cell.mode)) + "-seed" + std::to_string(cell.seed);
}

int cmd_compare(const CompareOptions& opt) {
  std::vector<AppModel> apps;
  if (opt.apps > 0) {
    apps = make_benchmark_suite(opt.apps, opt.screens, opt.tarpit_factor,
                                opt.suite_seed);
  } else {
    for (const auto& path : opt.scenarios) apps.push_back(load_model(path));
  }
  if (apps.empty())
    throw CLI::ValidationError("--scenario", "need --scenario files or --apps N");

  std::vector<Mode> modes;
  if (opt.modes.empty()) {
    modes = {Mode::kHybrid, Mode::kNoReuse, Mode::kNoLlm};
  } else {
    for (const auto& s : opt.modes) modes.push_back(parse_mode(s));
  }

  std::vector<std::uint64_t> seeds = opt.seeds;
  if (seeds.empty())
    for (int i = 1; i <= opt.seed_count; ++i) seeds.push_back(i);

  const bool any_escape_mode =
      std::any_of(modes.begin(), modes.end(), [](Mode m) {
        return m == Mode::kHybrid || m == Mode::kNoReuse;
      });
  AdvisorFactory factory;
  if (any_escape_mode) factory = make_advisor_factory(opt.advisor);

  CampaignConfig base;
  base.event_budget = opt.budget;
  base.time_budget_seconds = opt.time_budget;

  const int jobs = opt.jobs > 0
                       ? opt.jobs
                       : std::max(1u, std::thread::hardware_concurrency());
  const ComparisonResult result = run_comparison(apps, modes, seeds, base, factory,
                                                 jobs);

  fs::create_directories(opt.out_dir);
  const fs::path out(opt.out_dir);
  std::vector<SummaryRow> rows;
  int failures = 0;
  for (const CellResult& cell : result.cells) {
    if (cell.failed()) {
      ++failures;
      std::fprintf(stderr, "cell %s/%s/seed %llu failed: %s\n", cell.scenario.c_str(),
                   to_string(cell.mode), static_cast<unsigned long long>(cell.seed),
                   cell.error.c_str());
      continue;
    }
    const fs::path dir = out / cell.scenario / cell_dir_name(cell);
    fs::create_directories(dir);
    write_report_json(dir / "report.json", cell.report);
    write_trace_csv(dir / "trace.csv", cell.report);
    rows.push_back(make_summary_row(cell.report, cell.metrics, cell.memory_records));
  }
  write_summary_csv(out / "summary.csv", rows);

  // One plot per app: for each mode, the curve of the seed whose final
  // coverage is that mode's median (a representative run, not an average).
  for (const AppModel& app : apps) {
    std::vector<CurveSeries> series;
    for (Mode mode : modes) {
      std::vector<const CellResult*> cells;
      for (const CellResult& cell : result.cells)
        if (!cell.failed() && cell.scenario == app.name && cell.mode == mode)
          cells.push_back(&cell);
      if (cells.empty()) continue;
      std::sort(cells.begin(), cells.end(), [](const CellResult* a,
                                               const CellResult* b) {
        return a->metrics.screen_coverage < b->metrics.screen_coverage;
      });
      const CellResult* mid = cells[(cells.size() - 1) / 2];
      series.push_back(coverage_curve(mid->report, to_string(mode)));
    }
    if (!series.empty())
      write_curves_svg(out / ("curves-" + app.name + ".svg"),
                       app.name + " screen discovery", series);
  }

  const auto aggregates = aggregate_by_mode(result);
  std::ofstream agg(out / "aggregates.csv");
  agg << "mode,cells,coverage_median,coverage_q1,coverage_q3,crashes_median,"
         "escape_success_median,first_attempt_median,time_in_tarpit_median\n";
  for (const auto& a : aggregates) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                  a.mode.c_str(), a.screen_coverage.n, a.screen_coverage.median,
                  a.screen_coverage.q1, a.screen_coverage.q3, a.unique_crashes.median,
                  a.escape_success.median, a.first_attempt.median,
                  a.time_in_tarpit.median);
    agg << line;
  }
  agg.close();

  std::fputs(comparison_text(aggregates).c_str(), stdout);
  std::printf("cells               %zu ok, %d failed\n", rows.size(), failures);
  std::printf("outputs             %s\n", out.c_str());
  return failures == 0 ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateOptions {
  int screens = 12;
  double tarpit_factor = 0.85;
  std::uint64_t seed = 0;
  std::string out = "scenario.json";
  bool motivating = false;
};

int cmd_generate(const GenerateOptions& opt) {
  AppModel model;
  if (opt.motivating) {
    model = motivating_example();
  } else {
    if (opt.screens < 2 || opt.screens > 64) {
      std::fprintf(stderr, "error: --screens must be in [2, 64]\n");
      return kExitUsage;
    }
    if (opt.tarpit_factor < 0.0 || opt.tarpit_factor >= 1.0) {
      std::fprintf(stderr, "error: --tarpit-factor must be in [0, 1)\n");
      return kExitUsage;
    }
    model = generate_benchmark({opt.screens, opt.tarpit_factor, opt.seed});
  }
  if (const fs::path parent = fs::path(opt.out).parent_path(); !parent.empty())
    fs::create_directories(parent);
  save_scenario(model, opt.out);
  int tarpits = 0;
  for (const auto& s : model.screens) tarpits += s.tarpit_ground_truth ? 1 : 0;
  std::printf("wrote %s (%zu screens, %d flagged as tarpits)\n", opt.out.c_str(),
              model.screens.size(), tarpits);
  return kExitOk;
}

void add_advisor_flags(CLI::App* cmd, AdvisorOptions* opt) {
  cmd->add_option("--advisor", opt->kind, "Escape advisor implementation")
      ->check(CLI::IsMember({"oracle", "scripted", "http", "replay"}))
      ->capture_default_str();
  cmd->add_option("--oracle-epsilon", opt->oracle_epsilon,
                  "Oracle error rate: probability of a random valid answer")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--llm-endpoint", opt->llm_endpoint,
                  "Chat-completions URL for --advisor http "
                  "(bearer token from $TARPIT_ESCAPE_API_KEY)");
  cmd->add_option("--llm-model", opt->llm_model, "Model name sent to the endpoint")
      ->capture_default_str();
  cmd->add_option("--cassette", opt->cassette,
                  "Recorded exchanges replayed by --advisor replay");
  cmd->add_option("--script-file", opt->script_file,
                  "Responses for --advisor scripted, one per line");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Random GUI exploration with advisor-guided escape from UI tarpits, "
      "run against deterministic simulated apps."};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "Run one exploration campaign");
  run->add_option("--scenario", run_opt.scenario,
                  "Scenario JSON path ('motivating' for the built-in example)")
      ->required();
  run->add_option("--mode", run_opt.mode,
                  "hybrid | random_only | no_reuse | no_llm")
      ->check(CLI::IsMember({"hybrid", "random_only", "no_reuse", "no_llm"}))
      ->capture_default_str();
  run->add_option("--seed", run_opt.seed, "Campaign RNG seed")->capture_default_str();
  run->add_option("--budget", run_opt.budget, "Event budget")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  run->add_option("--out-dir", run_opt.out_dir, "Directory for output artifacts")
      ->capture_default_str();
  run->add_option("--start-screen", run_opt.start_screen,
                  "Start on this screen instead of the scenario's initial one");
  run->add_flag("--stop-after-first-crash", run_opt.stop_after_first_crash,
                "End the campaign at the first crash");
  run->add_option("--time-budget", run_opt.time_budget,
                  "Wall-clock cap in seconds (for live advisors)");
  add_advisor_flags(run, &run_opt.advisor);
  run->add_option("--record-cassette", run_opt.advisor.record_cassette,
                  "Save every advisor exchange to this cassette file");

  ReproduceOptions rep_opt;
  CLI::App* rep = app.add_subcommand(
      "reproduce-sec22",
      "Check the two-page trap arithmetic against Monte-Carlo estimates");
  rep->add_option("--trials", rep_opt.trials, "Trials for the trapped-walk estimate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  rep->add_option("--crash-trials", rep_opt.crash_trials,
                  "Trials for the crash-probability estimate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  rep->add_option("--seed", rep_opt.seed, "Monte-Carlo RNG seed")
      ->capture_default_str();

  CompareOptions cmp_opt;
  CLI::App* cmp = app.add_subcommand(
      "compare", "Run a mode x seed grid and aggregate the results");
  cmp->add_option("--scenario", cmp_opt.scenarios, "Scenario JSON paths (repeatable)");
  cmp->add_option("--apps", cmp_opt.apps,
                  "Generate this many benchmark apps instead of loading files");
  cmp->add_option("--screens", cmp_opt.screens, "Screens per generated app")
      ->capture_default_str();
  cmp->add_option("--tarpit-factor", cmp_opt.tarpit_factor,
                  "Self-loop density of generated apps")
      ->capture_default_str();
  cmp->add_option("--suite-seed", cmp_opt.suite_seed, "First generator seed")
      ->capture_default_str();
  cmp->add_option("--mode", cmp_opt.modes,
                  "Modes to compare (repeatable; default hybrid no_reuse no_llm)");
  cmp->add_option("--seed", cmp_opt.seeds, "Campaign seeds (repeatable)");
  cmp->add_option("--seeds", cmp_opt.seed_count,
                  "Shorthand for seeds 1..N when --seed is not given")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmp->add_option("--budget", cmp_opt.budget, "Event budget per campaign")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmp->add_option("--out-dir", cmp_opt.out_dir, "Directory for output artifacts")
      ->capture_default_str();
  cmp->add_option("--jobs", cmp_opt.jobs, "Worker pool size (default: logical CPUs)")
      ->check(CLI::NonNegativeNumber);
  cmp->add_option("--time-budget", cmp_opt.time_budget,
                  "Wall-clock cap in seconds per campaign");
  add_advisor_flags(cmp, &cmp_opt.advisor);

  GenerateOptions gen_opt;
  CLI::App* gen = app.add_subcommand("generate", "Write a synthetic scenario JSON");
  gen->add_option("--screens", gen_opt.screens, "Number of screens, in [2, 64]")
      ->capture_default_str();
  gen->add_option("--tarpit-factor", gen_opt.tarpit_factor,
                  "Self-loop density target, in [0, 1)")
      ->capture_default_str();
  gen->add_option("--seed", gen_opt.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_opt.out, "Output path")->capture_default_str();
  gen->add_flag("--motivating", gen_opt.motivating,
                "Write the built-in four-screen example instead of generating");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_opt);
    if (rep->parsed()) return cmd_reproduce_sec22(rep_opt);
    if (cmp->parsed()) return cmd_compare(cmp_opt);
    if (gen->parsed()) return cmd_generate(gen_opt);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return gen->parsed() ? kExitUsage : kExitScenario;
  } catch (const AdvisorError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitAdvisor;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitOk;
}
