#include "tarpit/driver.hpp"

#include <chrono>
#include <map>
#include <set>
#include <stdexcept>

namespace tarpit {
namespace {

const char* phase_name(StepSink::Phase phase) {
  switch (phase) {
    case StepSink::Phase::kRandom: return "random";
    case StepSink::Phase::kEscape: return "escape";
    case StepSink::Phase::kReuse: return "reuse";
    case StepSink::Phase::kForcedBack: return "forced_back";
  }
  return "?";
}

// Executes events against the runtime while keeping every per-event campaign
// record (sequence, trace, coverage, crashes) in one place.
class CampaignSink : public StepSink {
 public:
  CampaignSink(AppRuntime& runtime, StateSequence& seq, CampaignReport& report)
      : runtime_(&runtime), seq_(&seq), report_(&report) {}

  StepResult execute(const UiEvent& event, Phase phase) override {
    const std::string pre = runtime_->current_screen_id();
    const std::size_t pre_state = seq_->size() - 1;
    StepResult res = runtime_->execute(event);
    seq_->append(res.state);

    TraceEntry t;
    t.index = report_->events_executed;
    t.event = event;
    t.phase = phase_name(phase);
    t.pre_screen = pre;
    t.post_screen = res.state.true_screen_id;
    t.pre_state = pre_state;
    t.post_state = seq_->size() - 1;
    if (res.crashed) t.crash_signature = res.crash->signature;
    report_->trace.push_back(std::move(t));

    screens_.insert(res.state.true_screen_id);
    // A crash teleports to the restart splash; that jump is not an app
    // transition.
    if (!res.crashed) transitions_.insert({pre, res.state.true_screen_id});
    if (static_cast<int>(screens_.size()) != last_screens_ ||
        static_cast<int>(transitions_.size()) != last_transitions_) {
      last_screens_ = static_cast<int>(screens_.size());
      last_transitions_ = static_cast<int>(transitions_.size());
      report_->coverage.push_back({report_->events_executed, last_screens_, last_transitions_});
    }
    if (res.crashed) {
      // Report-level crashes are deduplicated by exact signature; the trace
      // keeps every occurrence.
      if (crash_signatures_.insert(res.crash->signature).second) {
        report_->crashes.push_back({res.crash->signature, report_->events_executed, pre});
      }
      if (!report_->first_crash_event) {
        report_->first_crash_event = report_->events_executed;
      }
    }
    ++report_->events_executed;
    return res;
  }

  void seed_initial_coverage(const std::string& screen) {
    screens_.insert(screen);
    last_screens_ = 1;
    report_->coverage.push_back({-1, 1, 0});
  }

 private:
  AppRuntime* runtime_;
  StateSequence* seq_;
  CampaignReport* report_;
  std::set<std::string> screens_;
  std::set<std::pair<std::string, std::string>> transitions_;
  std::set<std::string> crash_signatures_;
  int last_screens_ = 0;
  int last_transitions_ = 0;
};

// Detected-but-not-acted-on episodes for the passive modes, recovered from
// the hash sequence: maximal runs of adjacent-similar states at least one
// window long.
void append_passive_episodes(const StateSequence& seq, const DetectorConfig& cfg,
                             CampaignReport& report) {
  const std::size_t n = seq.size();
  if (n < 2) return;
  std::size_t run_start = 0;  // first state of the current similar run
  for (std::size_t i = 1; i <= n; ++i) {
    const bool continues =
        i < n && is_ui_similar(seq.hash_at(i - 1), seq.hash_at(i), cfg.theta);
    if (continues) continue;
    const std::size_t run_len = i - run_start;  // states in [run_start, i)
    if (run_len >= static_cast<std::size_t>(cfg.window)) {
      EpisodeRecord ep;
      // Detection would have fired at state run_start + window - 1, with the
      // window reaching back to run_start; the first in-window event is the
      // one leading out of that state.
      ep.start_event = static_cast<long>(run_start);
      ep.end_event = static_cast<long>(i - 2);
      ep.trap_screen = seq.state_at(run_start + cfg.window - 1).true_screen_id;
      report.episodes.push_back(std::move(ep));
    }
    run_start = i;
  }
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kHybrid: return "hybrid";
    case Mode::kRandomOnly: return "random_only";
    case Mode::kNoReuse: return "no_reuse";
    case Mode::kNoLlm: return "no_llm";
  }
  return "?";
}

std::optional<Mode> mode_from_string(const std::string& s) {
  if (s == "hybrid") return Mode::kHybrid;
  if (s == "random_only") return Mode::kRandomOnly;
  if (s == "no_reuse") return Mode::kNoReuse;
  if (s == "no_llm") return Mode::kNoLlm;
  return std::nullopt;
}

UiEvent pick_random_event(const ActionSpace& space, Rng& rng) {
  if (space.size() == 0) throw std::logic_error("cannot sample from an empty action space");
  UiEvent ev = space.at(static_cast<int>(rng.uniform_index(space.size())));
  if (ev.type == Interaction::kTextInput) {
    ev.payload = kTextPayloads[rng.uniform_index(std::size(kTextPayloads))];
  }
  return ev;
}

UiEvent gen_random_event(const UiState& state, Rng& rng) {
  return pick_random_event(build_action_space(state), rng);
}

CampaignResult run_campaign(const AppModel& model, const CampaignConfig& config,
                            const AdvisorFactory& advisor_factory) {
  if (config.event_budget < 0) {
    throw std::invalid_argument("event budget cannot be negative");
  }
  const bool escape_enabled = config.mode == Mode::kHybrid || config.mode == Mode::kNoReuse;
  const bool reuse_enabled = config.mode == Mode::kHybrid;

  AppRuntime runtime(model, {.start_screen = config.start_screen,
                             .start_flags = config.start_flags});
  Rng rng(config.seed);
  TarpitMemory memory(config.memory);
  StateSequence seq;
  seq.append(runtime.current_state());

  CampaignReport report;
  report.scenario_name = model.name;
  report.mode = config.mode;
  report.seed = config.seed;
  report.event_budget = config.event_budget;

  std::unique_ptr<Advisor> advisor;
  if (escape_enabled) {
    if (!advisor_factory) {
      throw std::invalid_argument(std::string("mode ") + to_string(config.mode) +
                                  " needs an advisor factory");
    }
    advisor = advisor_factory(runtime, config.seed ^ 0xad715eedULL);
    if (!advisor) throw std::invalid_argument("advisor factory returned null");
  }

  CampaignSink sink(runtime, seq, report);
  sink.seed_initial_coverage(runtime.current_screen_id());

  // Per-screen action spaces; states of one screen share a widget vector.
  std::map<const std::vector<Widget>*, ActionSpace> space_cache;
  const auto space_for = [&](const UiState& state) -> const ActionSpace& {
    auto [it, inserted] = space_cache.try_emplace(state.widgets.get());
    if (inserted) it->second = build_action_space(state);
    return it->second;
  };

  const auto start_time = std::chrono::steady_clock::now();
  const auto out_of_time = [&] {
    if (!config.time_budget_seconds) return false;
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start_time;
    return elapsed.count() >= *config.time_budget_seconds;
  };

  while (report.events_executed < config.event_budget && !out_of_time()) {
    if (escape_enabled && has_tarpit(seq, config.detector)) {
      EpisodeRecord ep;
      ep.start_event = report.events_executed - (config.detector.window - 1);
      ep.trap_screen = seq.back().true_screen_id;
      const EscapeOutcome out = run_escape(seq, sink, memory, *advisor, config.detector,
                                           config.escape, reuse_enabled, rng);
      ep.end_event = report.events_executed - 1;
      ep.attempts = static_cast<int>(out.session.attempts.size());
      ep.advisor_queries = out.session.advisor_queries;
      ep.forced_back = out.session.forced_back;
      report.advisor_queries += out.session.advisor_queries;
      ep.escaped = out.kind == EscapeOutcome::Kind::kEscaped;
      ep.crashed = out.kind == EscapeOutcome::Kind::kCrashed;
      if (ep.escaped) {
        ep.first_attempt = out.session.attempts.back().attempt_number == 1;
        ep.via_reuse = out.session.attempts.back().from_reuse;
        ep.escape_event = out.escape_event;
        ep.pre_escape_hash = seq.hash_at(seq.size() - 2).to_hex();
      }
      report.episodes.push_back(std::move(ep));
      if (config.stop_after_first_crash && out.kind == EscapeOutcome::Kind::kCrashed) break;
    } else {
      const UiEvent ev = pick_random_event(space_for(seq.back()), rng);
      const StepResult res = sink.execute(ev, StepSink::Phase::kRandom);
      if (config.stop_after_first_crash && res.crashed) break;
    }
  }

  if (!escape_enabled) {
    append_passive_episodes(seq, config.detector, report);
  }

  report.state_screens.reserve(seq.size());
  report.state_hashes.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    report.state_screens.push_back(seq.state_at(i).true_screen_id);
    report.state_hashes.push_back(seq.hash_at(i).to_hex());
  }

  return CampaignResult{std::move(report), std::move(memory)};
}

Metrics compute_metrics(const CampaignReport& report, const AppModel& model) {
  if (report.scenario_name != model.name) {
    throw std::invalid_argument("report for scenario '" + report.scenario_name +
                                "' does not match model '" + model.name + "'");
  }
  Metrics m;
  m.events_executed = report.events_executed;

  std::set<std::string> screens(report.state_screens.begin(), report.state_screens.end());
  m.unique_screens = static_cast<int>(screens.size());
  m.screen_coverage =
      model.screens.empty()
          ? 0.0
          : static_cast<double>(m.unique_screens) / static_cast<double>(model.screens.size());

  std::set<std::pair<std::string, std::string>> transitions;
  for (const auto& t : report.trace) {
    if (!t.crash_signature) transitions.insert({t.pre_screen, t.post_screen});
  }
  m.unique_transitions = static_cast<int>(transitions.size());

  m.episodes = static_cast<int>(report.episodes.size());
  long tarpit_events = 0;
  int on_true_tarpit = 0;
  int first_attempt = 0;
  for (const auto& ep : report.episodes) {
    if (ep.escaped) ++m.escaped_episodes;
    if (ep.first_attempt) ++first_attempt;
    if (ep.end_event >= ep.start_event) tarpit_events += ep.end_event - ep.start_event + 1;
    const ScreenDef* screen = model.find_screen(ep.trap_screen);
    if (screen && screen->tarpit_ground_truth) ++on_true_tarpit;
  }
  if (m.episodes > 0) {
    m.escape_success_rate = static_cast<double>(m.escaped_episodes) / m.episodes;
    m.first_attempt_escape_rate = static_cast<double>(first_attempt) / m.episodes;
    m.tarpit_detection_precision = static_cast<double>(on_true_tarpit) / m.episodes;
  }
  m.time_in_tarpit = report.events_executed > 0
                         ? static_cast<double>(tarpit_events) / report.events_executed
                         : 0.0;

  m.unique_crashes = static_cast<int>(report.crashes.size());
  int total_crashes = 0;
  for (const auto& t : report.trace) {
    if (t.crash_signature) ++total_crashes;
  }
  m.total_crashes = total_crashes;
  m.first_crash_event = report.first_crash_event;
  m.advisor_queries = report.advisor_queries;
  return m;
}

}  // namespace tarpit
