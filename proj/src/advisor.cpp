#include "tarpit/advisor.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "tarpit/simulator.hpp"
#include "tarpit/ui_model.hpp"

namespace tarpit {

OracleAdvisor::OracleAdvisor(const AppRuntime& runtime, double epsilon, std::uint64_t seed)
    : runtime_(&runtime), epsilon_(epsilon), rng_(seed) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("oracle epsilon must be in [0, 1]");
  }
}

std::string OracleAdvisor::suggest(const Prompt&) {
  const ActionSpace space = build_action_space(runtime_->current_state());
  if (epsilon_ > 0.0 && rng_.chance(epsilon_)) {
    return "Action ID: " + std::to_string(rng_.uniform_index(space.size()));
  }
  const ScreenDef* screen = runtime_->model().find_screen(runtime_->current_screen_id());
  int best = -1;
  if (screen) {
    for (const auto& [widget_id, interaction] : screen->escape_actions) {
      for (std::size_t i = 0; i < space.size(); ++i) {
        const Widget* w = space.source(static_cast<int>(i));
        if (w && w->widget_id == widget_id && space.events[i].type == interaction) {
          if (best < 0 || static_cast<int>(i) < best) best = static_cast<int>(i);
          break;
        }
      }
    }
  }
  if (best < 0) best = space.back_event().action_id;
  return "Action ID: " + std::to_string(best);
}

ScriptedAdvisor::ScriptedAdvisor(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

std::string ScriptedAdvisor::suggest(const Prompt&) {
  if (responses_.empty()) throw AdvisorError("scripted advisor has no responses");
  if (next_ < responses_.size()) return responses_[next_++];
  return responses_.back();
}

HttpChatAdvisor::HttpChatAdvisor(HttpAdvisorConfig config) : config_(std::move(config)) {
  std::string rest = config_.endpoint;
  const std::string http = "http://";
  if (rest.rfind("https://", 0) == 0) {
    throw AdvisorError("https endpoints are not supported in this build: " + config_.endpoint);
  }
  if (rest.rfind(http, 0) != 0) {
    throw AdvisorError("advisor endpoint must start with http://: " + config_.endpoint);
  }
  rest = rest.substr(http.size());
  const auto slash = rest.find('/');
  host_port_ = slash == std::string::npos ? rest : rest.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  if (host_port_.empty()) {
    throw AdvisorError("advisor endpoint has no host: " + config_.endpoint);
  }
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpChatAdvisor::suggest(const Prompt& prompt) {
  httplib::Client client(host_port_);
  client.set_connection_timeout(0, config_.timeout_ms * 1000);
  client.set_read_timeout(0, config_.timeout_ms * 1000);
  client.set_write_timeout(0, config_.timeout_ms * 1000);

  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = {{{"role", "system"}, {"content", prompt.system_text()}},
                      {{"role", "user"}, {"content", prompt.user_text()}}};
  body["temperature"] = config_.temperature;

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw AdvisorError("advisor request to " + config_.endpoint +
                       " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw AdvisorError("advisor returned HTTP " + std::to_string(res->status) + ": " +
                       res->body.substr(0, 200));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw AdvisorError(std::string("advisor response is not a chat completion: ") + e.what());
  }
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string prompt_digest(const Prompt& prompt) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(prompt.text());
  return os.str();
}

void save_cassette(const std::vector<CassetteEntry>& entries,
                   const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json item;
    item["prompt_hash"] = e.prompt_hash;
    item["prompt"] = e.prompt;
    item["response"] = e.response;
    j["entries"].push_back(std::move(item));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AdvisorError("cannot open cassette for writing: " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<CassetteEntry> load_cassette(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AdvisorError("cannot open cassette: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::vector<CassetteEntry> entries;
  try {
    const auto j = nlohmann::json::parse(buf.str());
    for (const auto& item : j.at("entries")) {
      CassetteEntry e;
      e.prompt_hash = item.at("prompt_hash").get<std::string>();
      e.prompt = item.value("prompt", "");
      e.response = item.at("response").get<std::string>();
      entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw AdvisorError("malformed cassette " + path.string() + ": " + e.what());
  }
  return entries;
}

CassetteRecorder::CassetteRecorder(Advisor& inner) : inner_(&inner) {}

std::string CassetteRecorder::suggest(const Prompt& prompt) {
  const std::string response = inner_->suggest(prompt);
  entries_.push_back({prompt_digest(prompt), prompt.text(), response});
  return response;
}

ReplayAdvisor::ReplayAdvisor(const std::filesystem::path& path) {
  for (const auto& e : load_cassette(path)) {
    by_hash_[e.prompt_hash].push_back(e.response);
  }
}

std::string ReplayAdvisor::suggest(const Prompt& prompt) {
  const auto it = by_hash_.find(prompt_digest(prompt));
  if (it == by_hash_.end()) {
    throw AdvisorError("cassette has no response for this prompt (digest " +
                       prompt_digest(prompt) + ")");
  }
  auto& queue = it->second;
  const std::string response = queue.front();
  if (queue.size() > 1) queue.pop_front();
  return response;
}

}  // namespace tarpit
