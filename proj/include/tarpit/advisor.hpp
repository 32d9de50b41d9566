#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tarpit/rng.hpp"

namespace tarpit {

class AppRuntime;

// Escape-advice request, kept in labeled sections so transports can split
// system/user roles and tests can pin individual parts.
struct Prompt {
  std::string role_section;
  std::string task_section;
  std::string ui_section;
  std::string history_section;
  std::string question_section;

  std::string system_text() const { return role_section; }
  std::string user_text() const {
    return task_section + "\n\n" + ui_section + "\n\n" + history_section + "\n\n" +
           question_section;
  }
  std::string text() const { return system_text() + "\n\n" + user_text(); }
};

// Transport or configuration failure while asking an advisor. The escape
// engine treats these as failed attempts; CLI setup surfaces them as exit
// code 3.
struct AdvisorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Advisor {
 public:
  virtual ~Advisor() = default;
  virtual std::string name() const = 0;
  // Returns free-form advice text, normally containing "Action ID: <n>".
  virtual std::string suggest(const Prompt& prompt) = 0;
};

// Ground-truth advisor for experiments: answers with the lowest-id declared
// escape action of the runtime's current screen. With probability epsilon it
// instead answers with a uniformly random valid action, modeling an unreliable
// model without network access.
class OracleAdvisor : public Advisor {
 public:
  OracleAdvisor(const AppRuntime& runtime, double epsilon = 0.0, std::uint64_t seed = 0);

  std::string name() const override { return "oracle"; }
  std::string suggest(const Prompt& prompt) override;

 private:
  const AppRuntime* runtime_;
  double epsilon_;
  Rng rng_;
};

// Replays a fixed list of responses, repeating the last one when exhausted.
class ScriptedAdvisor : public Advisor {
 public:
  explicit ScriptedAdvisor(std::vector<std::string> responses);

  std::string name() const override { return "scripted"; }
  std::string suggest(const Prompt& prompt) override;

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
};

struct HttpAdvisorConfig {
  std::string endpoint;  // http://host:port/path
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
  int timeout_ms = 10000;
  // Environment variable holding the bearer token; requests go out without
  // an Authorization header when it is unset.
  std::string api_key_env = "TARPIT_ESCAPE_API_KEY";
};

// Chat-completions client: POSTs {model, messages, temperature} with the
// prompt split into one system and one user message, and returns
// choices[0].message.content.
class HttpChatAdvisor : public Advisor {
 public:
  explicit HttpChatAdvisor(HttpAdvisorConfig config);

  std::string name() const override { return "http"; }
  std::string suggest(const Prompt& prompt) override;

 private:
  HttpAdvisorConfig config_;
  std::string host_port_;
  std::string path_;
  std::string api_key_;
};

std::uint64_t fnv1a64(const std::string& text);
// 16 hex chars of fnv1a64 over the full prompt text.
std::string prompt_digest(const Prompt& prompt);

struct CassetteEntry {
  std::string prompt_hash;
  std::string prompt;  // stored for human inspection, unused by replay
  std::string response;
};

void save_cassette(const std::vector<CassetteEntry>& entries,
                   const std::filesystem::path& path);
std::vector<CassetteEntry> load_cassette(const std::filesystem::path& path);

// Passes suggestions through to an inner advisor while logging every
// prompt/response pair for later offline replay.
class CassetteRecorder : public Advisor {
 public:
  explicit CassetteRecorder(Advisor& inner);

  std::string name() const override { return "record:" + inner_->name(); }
  std::string suggest(const Prompt& prompt) override;

  const std::vector<CassetteEntry>& entries() const { return entries_; }
  void save(const std::filesystem::path& path) const { save_cassette(entries_, path); }

 private:
  Advisor* inner_;
  std::vector<CassetteEntry> entries_;
};

// Serves recorded responses by prompt digest, in recording order for repeated
// identical prompts (sticking to the last one once drained). Unknown prompts
// raise AdvisorError, mirroring a dead transport.
class ReplayAdvisor : public Advisor {
 public:
  explicit ReplayAdvisor(const std::filesystem::path& path);

  std::string name() const override { return "replay"; }
  std::string suggest(const Prompt& prompt) override;

 private:
  std::map<std::string, std::deque<std::string>> by_hash_;
};

}  // namespace tarpit
