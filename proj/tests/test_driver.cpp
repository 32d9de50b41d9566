#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "tarpit/driver.hpp"
#include "tarpit/report.hpp"
#include "tarpit/scenario.hpp"

using namespace tarpit;

namespace {

AdvisorFactory oracle_factory(double epsilon = 0.0) {
  return [epsilon](const AppRuntime& rt, std::uint64_t seed) {
    return std::make_unique<OracleAdvisor>(rt, epsilon, seed);
  };
}

AdvisorFactory scripted_factory(std::vector<std::string> lines) {
  return [lines](const AppRuntime&, std::uint64_t) {
    return std::make_unique<ScriptedAdvisor>(lines);
  };
}

}  // namespace

TEST_CASE("random events are uniform over the preview action space") {
  const AppModel app = motivating_example();
  AppRuntime rt(app, {.start_screen = "preview"});
  const UiState state = rt.current_state();
  Rng rng(99);

  std::map<int, int> counts;
  std::map<std::string, int> payloads;
  const int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    const UiEvent ev = gen_random_event(state, rng);
    ++counts[ev.action_id];
    if (ev.type == Interaction::kTextInput) {
      REQUIRE(ev.payload.has_value());
      ++payloads[*ev.payload];
    } else {
      CHECK_FALSE(ev.payload.has_value());
    }
  }

  REQUIRE(counts.size() == 70);
  // 1/70 with a +-0.5 percentage point tolerance.
  const double lo = kDraws * (1.0 / 70 - 0.005);
  const double hi = kDraws * (1.0 / 70 + 0.005);
  for (const auto& [id, n] : counts) {
    CHECK(n > lo);
    CHECK(n < hi);
  }
  // The single text_input action saw every canned payload.
  CHECK(payloads.size() == 4);
}

TEST_CASE("identical configs reproduce byte-identical reports") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kHybrid;
  cfg.seed = 1234;
  cfg.event_budget = 600;
  cfg.start_screen = "preview";

  const CampaignResult a = run_campaign(app, cfg, oracle_factory());
  const CampaignResult b = run_campaign(app, cfg, oracle_factory());
  CHECK(report_to_json(a.report) == report_to_json(b.report));
  CHECK(a.memory.export_json() == b.memory.export_json());

  CampaignConfig other = cfg;
  other.seed = 1235;
  const CampaignResult c = run_campaign(app, other, oracle_factory());
  CHECK(report_to_json(a.report) != report_to_json(c.report));
}

TEST_CASE("budget zero produces only the initial state") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kRandomOnly;
  cfg.event_budget = 0;

  const CampaignResult res = run_campaign(app, cfg);
  CHECK(res.report.events_executed == 0);
  CHECK(res.report.trace.empty());
  CHECK(res.report.episodes.empty());
  REQUIRE(res.report.state_screens.size() == 1);
  CHECK(res.report.state_screens[0] == "library");
  REQUIRE(res.report.coverage.size() == 1);
  CHECK(res.report.coverage[0].screens == 1);

  CampaignConfig bad = cfg;
  bad.event_budget = -1;
  CHECK_THROWS_AS(run_campaign(app, bad), std::invalid_argument);
}

TEST_CASE("passive modes never consult an advisor and still log episodes") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kNoLlm;
  cfg.seed = 7;
  cfg.event_budget = 2000;
  cfg.start_screen = "preview";

  int factory_calls = 0;
  const AdvisorFactory counting = [&](const AppRuntime& rt, std::uint64_t seed) {
    ++factory_calls;
    return std::make_unique<OracleAdvisor>(rt, 0.0, seed);
  };
  const CampaignResult res = run_campaign(app, cfg, counting);

  CHECK(factory_calls == 0);
  CHECK(res.report.advisor_queries == 0);
  CHECK(res.memory.size() == 0);
  CHECK(res.report.events_executed == 2000);
  for (const auto& t : res.report.trace) CHECK(t.phase == "random");

  // Every screen of this app self-loops heavily, so detections abound; most
  // land on the preview where the walk starts.
  REQUIRE(res.report.episodes.size() > 10);
  int on_preview = 0;
  for (const auto& ep : res.report.episodes) {
    CHECK(ep.attempts == 0);
    CHECK_FALSE(ep.escaped);
    CHECK(ep.end_event - ep.start_event + 1 >= cfg.detector.window - 1);
    CHECK(app.find_screen(ep.trap_screen) != nullptr);
    on_preview += ep.trap_screen == "preview";
  }
  CHECK(on_preview * 2 > static_cast<int>(res.report.episodes.size()));

  CampaignConfig random_cfg = cfg;
  random_cfg.mode = Mode::kRandomOnly;
  const CampaignResult r2 = run_campaign(app, random_cfg);
  CHECK(r2.report.advisor_queries == 0);
  // Both passive modes walk the identical event stream.
  CHECK(r2.report.state_hashes == res.report.state_hashes);
}

TEST_CASE("escape modes require an advisor factory") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kHybrid;
  CHECK_THROWS_AS(run_campaign(app, cfg), std::invalid_argument);
  cfg.mode = Mode::kNoReuse;
  CHECK_THROWS_AS(run_campaign(app, cfg), std::invalid_argument);
}

TEST_CASE("non-random phases appear only inside recorded episodes") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kHybrid;
  cfg.seed = 21;
  cfg.event_budget = 1500;

  const CampaignResult res = run_campaign(app, cfg, oracle_factory());
  const std::set<std::string> phases = {"random", "escape", "reuse", "forced_back"};
  for (const auto& t : res.report.trace) {
    REQUIRE(phases.count(t.phase) == 1);
    if (t.phase == "random") continue;
    const bool inside = std::any_of(
        res.report.episodes.begin(), res.report.episodes.end(), [&](const EpisodeRecord& e) {
          return e.start_event <= t.index && t.index <= e.end_event;
        });
    CHECK_MESSAGE(inside, "event ", t.index, " phase ", t.phase, " outside episodes");
  }

  // Episode bookkeeping matches the trace it straddles.
  for (const auto& ep : res.report.episodes) {
    CHECK(ep.end_event < res.report.events_executed);
    if (ep.escaped) {
      const auto& last = res.report.trace[ep.end_event];
      CHECK((last.phase == "escape" || last.phase == "reuse"));
      CHECK(last.post_screen != ep.trap_screen);
    }
    if (ep.forced_back) CHECK(res.report.trace[ep.end_event].phase == "forced_back");
  }
}

TEST_CASE("restart splash states break similarity windows") {
  // Armed detail back-crashes at random; crashes must cut every detected run.
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kNoLlm;
  cfg.seed = 3;
  cfg.event_budget = 5000;
  cfg.start_screen = "episode_detail";
  cfg.start_flags = {{"multi_select", -1}};

  const CampaignResult res = run_campaign(app, cfg);
  REQUIRE_FALSE(res.report.crashes.empty());
  CHECK(res.report.crashes[0].signature.find("NullPointerException") != std::string::npos);
  CHECK(res.report.first_crash_event.has_value());

  std::vector<long> crash_events;
  for (const auto& t : res.report.trace) {
    if (t.crash_signature) crash_events.push_back(t.index);
  }
  REQUIRE(crash_events.size() >= 5);
  CHECK(*res.report.first_crash_event == crash_events.front());
  for (const auto& ep : res.report.episodes) {
    for (long c : crash_events) {
      const bool spans = ep.start_event <= c && c <= ep.end_event;
      CHECK_FALSE(spans);
    }
  }

  const Metrics m = compute_metrics(res.report, app);
  CHECK(m.unique_crashes == 1);
  CHECK(m.total_crashes == static_cast<int>(crash_events.size()));
  CHECK(m.total_crashes > m.unique_crashes);
}

TEST_CASE("hybrid exploration finds the armed crash quickly") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kHybrid;
  cfg.seed = 11;
  cfg.event_budget = 5000;
  cfg.stop_after_first_crash = true;

  const CampaignResult res = run_campaign(app, cfg, oracle_factory());
  REQUIRE(res.report.first_crash_event.has_value());
  CHECK(*res.report.first_crash_event < 600);
  CHECK(res.report.crashes.size() == 1);
  // The campaign halted at the crash.
  CHECK(res.report.trace.back().crash_signature.has_value());
  CHECK(res.report.events_executed == res.report.trace.back().index + 1);

  // Memory accumulated the escapes that led there.
  CHECK(res.memory.size() >= 1);
}

TEST_CASE("trace length respects the episode overshoot bound") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kNoReuse;
  cfg.seed = 5;
  cfg.event_budget = 800;
  cfg.start_screen = "preview";

  // An advisor whose advice always self-loops maximizes episode overshoot.
  const CampaignResult res = run_campaign(app, cfg, scripted_factory({"Action ID: 0"}));
  const long bound =
      cfg.event_budget +
      static_cast<long>(res.report.episodes.size()) * (cfg.escape.max_retry + 1);
  CHECK(res.report.events_executed >= cfg.event_budget);
  CHECK(res.report.events_executed <= bound);
  CHECK(static_cast<long>(res.report.trace.size()) == res.report.events_executed);

  // Every episode burned the full retry allowance and the forced back.
  for (const auto& ep : res.report.episodes) {
    CHECK(ep.attempts == 10);
    CHECK(ep.forced_back);
    CHECK_FALSE(ep.escaped);
  }
}

TEST_CASE("state bookkeeping stays aligned with the trace") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kHybrid;
  cfg.seed = 17;
  cfg.event_budget = 400;

  const CampaignResult res = run_campaign(app, cfg, oracle_factory());
  REQUIRE(res.report.state_screens.size() == res.report.state_hashes.size());
  CHECK(res.report.state_screens.size() ==
        static_cast<std::size_t>(res.report.events_executed) + 1);
  for (const auto& t : res.report.trace) {
    CHECK(t.post_state == t.pre_state + 1);
    CHECK(res.report.state_screens.at(t.pre_state) == t.pre_screen);
    CHECK(res.report.state_screens.at(t.post_state) == t.post_screen);
  }
}

TEST_CASE("metric computation matches hand-derived values") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kHybrid;
  cfg.seed = 2;
  cfg.event_budget = 1200;

  const CampaignResult res = run_campaign(app, cfg, oracle_factory());
  const Metrics m = compute_metrics(res.report, app);

  CHECK(m.events_executed == res.report.events_executed);
  CHECK(m.episodes == static_cast<int>(res.report.episodes.size()));

  int escaped = 0, first = 0, on_tarpit = 0;
  long tarpit_events = 0;
  for (const auto& ep : res.report.episodes) {
    escaped += ep.escaped;
    first += ep.escaped && ep.first_attempt;
    tarpit_events += ep.end_event - ep.start_event + 1;
    const ScreenDef* def = nullptr;
    for (const auto& s : app.screens)
      if (s.id == ep.trap_screen) def = &s;
    REQUIRE(def != nullptr);
    on_tarpit += def->tarpit_ground_truth;
  }
  REQUIRE(m.episodes > 0);
  CHECK(m.escaped_episodes == escaped);
  CHECK(*m.escape_success_rate == doctest::Approx(double(escaped) / m.episodes));
  CHECK(*m.first_attempt_escape_rate == doctest::Approx(double(first) / m.episodes));
  CHECK(*m.tarpit_detection_precision == doctest::Approx(double(on_tarpit) / m.episodes));
  CHECK(*m.tarpit_detection_precision == 1.0);  // all four screens are true traps
  CHECK(m.time_in_tarpit ==
        doctest::Approx(double(tarpit_events) / res.report.events_executed));

  std::set<std::string> screens(res.report.state_screens.begin(),
                                res.report.state_screens.end());
  CHECK(m.unique_screens == static_cast<int>(screens.size()));
  CHECK(m.screen_coverage == doctest::Approx(double(screens.size()) / app.screens.size()));
  CHECK(m.advisor_queries == res.report.advisor_queries);

  AppModel other = app;
  other.name = "different";
  CHECK_THROWS_AS(compute_metrics(res.report, other), std::invalid_argument);
}

TEST_CASE("no-episode reports leave rate metrics undefined") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kRandomOnly;
  cfg.event_budget = 5;  // too short for any window
  const CampaignResult res = run_campaign(app, cfg);
  const Metrics m = compute_metrics(res.report, app);
  CHECK(m.episodes == 0);
  CHECK_FALSE(m.escape_success_rate.has_value());
  CHECK_FALSE(m.first_attempt_escape_rate.has_value());
  CHECK_FALSE(m.tarpit_detection_precision.has_value());
  CHECK(m.time_in_tarpit == 0.0);
  CHECK_FALSE(m.first_crash_event.has_value());
}

TEST_CASE("escaped episodes leave a replayable memory record") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kHybrid;
  cfg.seed = 29;
  cfg.event_budget = 1500;

  const CampaignResult res = run_campaign(app, cfg, oracle_factory());
  int escaped = 0;
  for (const auto& ep : res.report.episodes) {
    if (!ep.escaped) continue;
    ++escaped;
    REQUIRE_FALSE(ep.pre_escape_hash.empty());
    const auto* rec = res.memory.lookup(PHash::from_hex(ep.pre_escape_hash));
    REQUIRE_MESSAGE(rec != nullptr, "no record for episode at ", ep.start_event);
    const bool holds_event =
        std::any_of(rec->actions.begin(), rec->actions.end(), [&](const UiEvent& a) {
          return a.action_id == ep.escape_event->action_id &&
                 a.type == ep.escape_event->type;
        });
    CHECK(holds_event);
  }
  REQUIRE(escaped > 0);
  CHECK(res.memory.size() <= 4);  // at most one record per distinct screen look
}

TEST_CASE("mode names round-trip") {
  for (Mode m : {Mode::kHybrid, Mode::kRandomOnly, Mode::kNoReuse, Mode::kNoLlm}) {
    const auto parsed = mode_from_string(to_string(m));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == m);
  }
  CHECK_FALSE(mode_from_string("turbo").has_value());
}

TEST_CASE("report serializations carry the campaign verbatim") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kHybrid;
  cfg.seed = 4;
  cfg.event_budget = 300;

  const CampaignResult res = run_campaign(app, cfg, oracle_factory());
  const std::string json = report_to_json(res.report);
  CHECK(json.find("\"scenario\": \"motivating\"") != std::string::npos);
  CHECK(json.find("\"mode\": \"hybrid\"") != std::string::npos);
  CHECK(json.find("\"trace\"") != std::string::npos);

  const std::string csv = trace_csv(res.report);
  const std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
  CHECK(rows == res.report.trace.size() + 1);  // header + one per event
  CHECK(csv.rfind("index,phase,action_id,type,payload,", 0) == 0);

  const Metrics m = compute_metrics(res.report, app);
  const std::string summary = summary_csv({make_summary_row(res.report, m, res.memory.size())});
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 2);
  CHECK(summary.find("motivating,hybrid,4,300,") != std::string::npos);

  const std::string svg = curves_svg("coverage", {coverage_curve(res.report, "hybrid")});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("hybrid") != std::string::npos);
}

TEST_CASE("wall-clock budget halts a campaign early") {
  const AppModel app = motivating_example();
  CampaignConfig cfg;
  cfg.mode = Mode::kRandomOnly;
  cfg.seed = 8;
  cfg.event_budget = 2000000000;  // effectively unbounded
  cfg.time_budget_seconds = 0.2;

  const CampaignResult res = run_campaign(app, cfg);
  CHECK(res.report.events_executed > 0);
  CHECK(res.report.events_executed < cfg.event_budget);
}
