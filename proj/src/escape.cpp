#include "tarpit/escape.hpp"

#include <cctype>
#include <regex>
#include <stdexcept>

#include "tarpit/simulator.hpp"

namespace tarpit {
namespace {

std::string action_line(const ActionSpace& space, int id) {
  const Widget* w = space.source(id);
  const std::string desc = w ? w->describe() : "system navigation";
  return "ID " + std::to_string(id) + ": " + to_string(space.events[id].type) + " on " + desc;
}

std::string history_line(const EscapeAttempt& a) {
  std::string line = "Attempt " + std::to_string(a.attempt_number) + ": ";
  if (a.event) {
    line += "ID " + std::to_string(a.event->action_id) + " (" + to_string(a.event->type);
    if (a.from_reuse) line += ", replayed from memory";
    line += ")";
  } else {
    line += "no action executed (" + a.failure_reason + ")";
  }
  return line + " -> still trapped";
}

std::optional<std::string> first_quoted(const std::string& text) {
  const auto open = text.find('"');
  if (open == std::string::npos) return std::nullopt;
  const auto close = text.find('"', open + 1);
  if (close == std::string::npos) return std::nullopt;
  return text.substr(open + 1, close - open - 1);
}

bool ident_char(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

std::optional<long> first_action_integer(const std::string& text) {
  // The filler between "id" and the number must not swallow a minus sign, so
  // a negative answer is reported out of range instead of misread.
  static const std::regex kAfterMarker(R"(action[\s_:=-]*id[^0-9-]*?(-?\d+))",
                                       std::regex::icase);
  std::smatch m;
  if (std::regex_search(text, m, kAfterMarker)) return std::stol(m[1].str());
  // Otherwise the first standalone integer: a digit run not glued to an
  // identifier on either side (so "w3c" or "error404page" do not count).
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) continue;
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    const bool glued_left = i > 0 && ident_char(text[i - 1]);
    const bool glued_right = j < text.size() && ident_char(text[j]);
    if (!glued_left && !glued_right) return std::stol(text.substr(i, j - i));
    i = j;
  }
  return std::nullopt;
}

}  // namespace

Prompt build_prompt(const UiState& state, const ActionSpace& space,
                    const std::vector<EscapeAttempt>& history) {
  (void)state;
  Prompt p;
  p.role_section =
      "You are a mobile UI testing assistant helping an automated explorer that is stuck "
      "on one screen of an Android app.";
  p.task_section =
      "The explorer has observed a run of nearly identical screens, so it is most likely "
      "trapped in a UI loop. Pick the action most likely to navigate away from the current "
      "screen.";
  p.ui_section = "Available actions on the current screen:";
  for (std::size_t i = 0; i < space.size(); ++i) {
    p.ui_section += "\n" + action_line(space, static_cast<int>(i));
  }
  p.history_section = "Previous attempts this episode:";
  if (history.empty()) {
    p.history_section += "\n(none)";
  } else {
    for (const auto& a : history) p.history_section += "\n" + history_line(a);
  }
  p.question_section =
      "Answer with a single line of the form \"Action ID: <n>\". For text_input actions "
      "you may append the text to type in double quotes.";
  return p;
}

ParsedResponse parse_response(const std::string& response, const ActionSpace& space,
                              const std::string& default_text_payload) {
  ParsedResponse out;
  std::optional<long> id;
  try {
    id = first_action_integer(response);
  } catch (const std::out_of_range&) {
    out.error = "action id in response does not fit an integer";
    return out;
  }
  if (!id) {
    out.error = "no action id in response";
    return out;
  }
  if (*id < 0 || *id >= static_cast<long>(space.size())) {
    out.error = "action id " + std::to_string(*id) + " out of range (0.." +
                std::to_string(space.size() - 1) + ")";
    return out;
  }
  UiEvent event = space.at(static_cast<int>(*id));
  if (event.type == Interaction::kTextInput) {
    const auto quoted = first_quoted(response);
    event.payload = quoted ? *quoted : default_text_payload;
  }
  out.event = event;
  return out;
}

EscapeOutcome run_escape(StateSequence& seq, StepSink& sink, TarpitMemory& memory,
                         Advisor& advisor, const DetectorConfig& detector,
                         const EscapeConfig& config, bool reuse_enabled, Rng& rng) {
  if (config.max_retry < 1) {
    throw std::invalid_argument("escape max_retry must be at least 1");
  }
  EscapeOutcome outcome;
  EscapeSession& session = outcome.session;

  auto execute_checked = [&](const UiEvent& ev, StepSink::Phase phase) {
    const std::size_t before = seq.size();
    StepResult res = sink.execute(ev, phase);
    if (seq.size() != before + 1) {
      throw std::logic_error("StepSink must append exactly one state per executed event");
    }
    return res;
  };

  for (int attempt = 1; attempt <= config.max_retry; ++attempt) {
    EscapeAttempt record;
    record.attempt_number = attempt;

    const UiState current = seq.back();
    const ActionSpace space = build_action_space(current);

    UiEvent event;
    bool have_event = false;
    if (reuse_enabled) {
      const double zeta = rng.uniform_real();
      const TarpitMemory::Dispatch d = memory.dispatch(current, zeta, rng);
      if (d.kind == TarpitMemory::Dispatch::Kind::kReuse) {
        event = *d.event;
        record.from_reuse = true;
        have_event = true;
      }
    }
    if (!have_event) {
      const Prompt prompt = build_prompt(current, space, session.attempts);
      ++session.advisor_queries;
      std::string response;
      try {
        response = advisor.suggest(prompt);
      } catch (const AdvisorError& e) {
        session.exchanges.emplace_back(prompt.text(), std::string("<transport error: ") +
                                                          e.what() + ">");
        record.failure_reason = std::string("advisor transport failure: ") + e.what();
        session.attempts.push_back(record);
        continue;
      }
      session.exchanges.emplace_back(prompt.text(), response);
      const ParsedResponse parsed = parse_response(response, space,
                                                   config.default_text_payload);
      if (!parsed.event) {
        record.failure_reason = parsed.error;
        session.attempts.push_back(record);
        continue;
      }
      event = *parsed.event;
      have_event = true;
    }

    const StepResult res = execute_checked(
        event, record.from_reuse ? StepSink::Phase::kReuse : StepSink::Phase::kEscape);
    record.event = event;
    if (res.crashed) {
      record.outcome = EscapeAttempt::Outcome::kCrashed;
      session.attempts.push_back(record);
      outcome.kind = EscapeOutcome::Kind::kCrashed;
      return outcome;
    }
    if (!has_tarpit(seq, detector)) {
      record.outcome = EscapeAttempt::Outcome::kEscaped;
      session.attempts.push_back(record);
      memory.record_escape(seq.state_at(seq.size() - 2), event);
      outcome.kind = EscapeOutcome::Kind::kEscaped;
      outcome.escape_event = event;
      return outcome;
    }
    record.outcome = EscapeAttempt::Outcome::kStillTrapped;
    session.attempts.push_back(record);
  }

  // Retries exhausted: force one whole-screen back. It is never recorded as an
  // escape even when it happens to leave the screen.
  const ActionSpace space = build_action_space(seq.back());
  session.forced_back = true;
  const StepResult res = execute_checked(space.back_event(), StepSink::Phase::kForcedBack);
  outcome.kind = res.crashed ? EscapeOutcome::Kind::kCrashed : EscapeOutcome::Kind::kExhausted;
  return outcome;
}

}  // namespace tarpit
