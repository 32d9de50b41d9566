#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tarpit/advisor.hpp"
#include "tarpit/detector.hpp"
#include "tarpit/memory.hpp"
#include "tarpit/rng.hpp"
#include "tarpit/ui_model.hpp"

namespace tarpit {

struct StepResult;

// Where the escape engine sends events for execution. Implementations own all
// campaign bookkeeping (state sequence append, trace rows, crash accounting);
// the engine only decides which event to try next.
class StepSink {
 public:
  enum class Phase { kRandom, kEscape, kReuse, kForcedBack };

  virtual ~StepSink() = default;
  virtual StepResult execute(const UiEvent& event, Phase phase) = 0;
};

struct EscapeConfig {
  int max_retry = 10;  // total advised attempts per episode, reuse included
  std::string default_text_payload = "test";
};

struct EscapeAttempt {
  int attempt_number = 0;  // 1-based
  // Empty when the attempt consumed a retry without executing anything
  // (transport failure or unparseable advice).
  std::optional<UiEvent> event;
  enum class Outcome { kStillTrapped, kEscaped, kCrashed, kNoEvent } outcome = Outcome::kNoEvent;
  bool from_reuse = false;
  std::string failure_reason;  // set for kNoEvent
};

struct EscapeSession {
  std::vector<EscapeAttempt> attempts;
  // One entry per advisor consultation: prompt text and raw response (or the
  // transport error message).
  std::vector<std::pair<std::string, std::string>> exchanges;
  bool forced_back = false;
  int advisor_queries = 0;
};

struct EscapeOutcome {
  enum class Kind { kEscaped, kExhausted, kCrashed };
  Kind kind = Kind::kExhausted;
  std::optional<UiEvent> escape_event;  // set for kEscaped
  EscapeSession session;
};

// Renders the advisor request for the current trapped state: role, task, the
// enumerated action space, the attempt history of this session, and the final
// question.
Prompt build_prompt(const UiState& state, const ActionSpace& space,
                    const std::vector<EscapeAttempt>& history);

struct ParsedResponse {
  std::optional<UiEvent> event;
  std::string error;  // empty on success
};

// Extracts an action from advice text: the first integer after "action id"
// (case-insensitive), else the first standalone integer; a quoted string, if
// present, becomes the payload of text_input events, which otherwise get
// default_text_payload.
ParsedResponse parse_response(const std::string& response, const ActionSpace& space,
                              const std::string& default_text_payload);

// Escape loop for one detected tarpit episode. Preconditions: seq currently
// satisfies has_tarpit(seq, detector). Each attempt either replays a
// remembered escape (when reuse_enabled, a matching record exists and the
// reuse coin lands) or asks the advisor. Executed events go through sink,
// which must append the resulting state to seq. Success is has_tarpit turning
// false; the pre-escape state and successful event are then recorded in
// memory. After max_retry failures one whole-screen back is forced, never
// recorded.
EscapeOutcome run_escape(StateSequence& seq, StepSink& sink, TarpitMemory& memory,
                         Advisor& advisor, const DetectorConfig& detector,
                         const EscapeConfig& config, bool reuse_enabled, Rng& rng);

}  // namespace tarpit
