#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tarpit/advisor.hpp"
#include "tarpit/detector.hpp"
#include "tarpit/escape.hpp"
#include "tarpit/memory.hpp"
#include "tarpit/rng.hpp"
#include "tarpit/simulator.hpp"

namespace tarpit {

enum class Mode {
  kHybrid,      // random + advisor-guided escape + memory reuse
  kRandomOnly,  // pure random events, detection only logged
  kNoReuse,     // escapes consult the advisor every time, memory still records
  kNoLlm,       // alias ablation of kRandomOnly: no advisor, no escapes
};

const char* to_string(Mode mode);
std::optional<Mode> mode_from_string(const std::string& s);

// Text typed into text_input events chosen by the random generator.
inline constexpr const char* kTextPayloads[] = {"test", "123", "a@b.c", ""};

struct CampaignConfig {
  Mode mode = Mode::kHybrid;
  std::uint64_t seed = 0;
  long event_budget = 5000;  // executed events; escape episodes may overshoot
  DetectorConfig detector;
  MemoryConfig memory;
  EscapeConfig escape;
  std::optional<std::string> start_screen;
  std::vector<FlagSet> start_flags;
  bool stop_after_first_crash = false;
  // Wall-clock cap for live-advisor runs; the campaign stops at whichever of
  // the two budgets is hit first. Unset keeps runs fully deterministic.
  std::optional<double> time_budget_seconds;
};

struct TraceEntry {
  long index = 0;  // executed-event counter, 0-based
  UiEvent event;
  std::string phase;  // random | escape | reuse | forced_back
  std::string pre_screen;
  std::string post_screen;
  std::size_t pre_state = 0;   // indices into the state sequence
  std::size_t post_state = 0;
  std::optional<std::string> crash_signature;
};

struct EpisodeRecord {
  // First event whose endpoints both lie inside the detected window, and the
  // last event of the episode.
  long start_event = 0;
  long end_event = 0;
  std::string trap_screen;
  int attempts = 0;  // advised attempts, without the forced back
  bool escaped = false;
  bool crashed = false;
  bool first_attempt = false;  // escaped without any failed attempt
  bool via_reuse = false;
  bool forced_back = false;
  std::optional<UiEvent> escape_event;
  std::string pre_escape_hash;  // hex hash of the state the escape left from
  int advisor_queries = 0;
};

struct CrashEntry {
  std::string signature;
  long event_index = 0;
  std::string screen;
};

struct CoveragePoint {
  long event_index = 0;
  int screens = 0;
  int transitions = 0;
};

struct CampaignReport {
  std::string scenario_name;
  Mode mode = Mode::kHybrid;
  std::uint64_t seed = 0;
  long event_budget = 0;
  long events_executed = 0;
  std::vector<std::string> state_screens;  // ground-truth screen per state
  std::vector<std::string> state_hashes;   // hex screenshot hash per state
  std::vector<TraceEntry> trace;
  std::vector<EpisodeRecord> episodes;
  std::vector<CrashEntry> crashes;  // first occurrence per distinct signature
  std::vector<CoveragePoint> coverage;  // appended whenever a count grows
  long advisor_queries = 0;
  std::optional<long> first_crash_event;
};

struct Metrics {
  long events_executed = 0;
  int unique_screens = 0;
  double screen_coverage = 0.0;
  int unique_transitions = 0;
  int episodes = 0;
  int escaped_episodes = 0;
  std::optional<double> escape_success_rate;
  std::optional<double> first_attempt_escape_rate;
  std::optional<double> tarpit_detection_precision;
  double time_in_tarpit = 0.0;
  int unique_crashes = 0;
  int total_crashes = 0;
  std::optional<long> first_crash_event;
  long advisor_queries = 0;
};

using AdvisorFactory =
    std::function<std::unique_ptr<Advisor>(const AppRuntime&, std::uint64_t seed)>;

struct CampaignResult {
  CampaignReport report;
  TarpitMemory memory;
};

// Uniform draw over the state's action space; text_input events get a payload
// from kTextPayloads.
UiEvent gen_random_event(const UiState& state, Rng& rng);
UiEvent pick_random_event(const ActionSpace& space, Rng& rng);

// One full exploration campaign. The factory is consulted once (with the
// runtime and a seed derived from the campaign seed) for modes that escape;
// passive modes never touch it.
CampaignResult run_campaign(const AppModel& model, const CampaignConfig& config,
                            const AdvisorFactory& advisor_factory = {});

// Consistency-checked summary statistics; throws if the report was produced
// for a differently named scenario.
Metrics compute_metrics(const CampaignReport& report, const AppModel& model);

}  // namespace tarpit
