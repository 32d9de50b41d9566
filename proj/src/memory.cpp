#include "tarpit/memory.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tarpit {

using nlohmann::json;

TarpitMemory::TarpitMemory(MemoryConfig cfg) : cfg_(cfg) {
  if (!(cfg.theta_mem > 0.0 && cfg.theta_mem <= 1.0)) {
    throw std::invalid_argument("TarpitMemory: theta_mem must be in (0, 1]");
  }
  if (!(cfg.p_reuse >= 0.0 && cfg.p_reuse <= 1.0)) {
    throw std::invalid_argument("TarpitMemory: p_reuse must be in [0, 1]");
  }
}

const TarpitRecord* TarpitMemory::lookup(PHash hash) const {
  for (const TarpitRecord& rec : records_) {
    if (is_ui_similar(hash, rec.representative_hash, cfg_.theta_mem)) return &rec;
  }
  return nullptr;
}

const TarpitRecord* TarpitMemory::lookup(const UiState& state) const {
  return lookup(dhash(state.image()));
}

void TarpitMemory::record_escape(const UiState& state, const UiEvent& event) {
  const PHash hash = dhash(state.image());
  TarpitRecord* rec = const_cast<TarpitRecord*>(lookup(hash));
  if (rec == nullptr) {
    TarpitRecord fresh;
    fresh.tarpit_id = static_cast<int>(records_.size());
    fresh.representative_hash = hash;
    fresh.representative = state;
    records_.push_back(std::move(fresh));
    rec = &records_.back();
  }
  for (const UiEvent& known : rec->actions) {
    if (known.type == event.type && known.bounds == event.bounds && known.payload == event.payload) {
      return;  // already remembered
    }
  }
  rec->actions.push_back(event);
}

TarpitMemory::Dispatch TarpitMemory::dispatch(const UiState& state, double zeta, Rng& rng) const {
  Dispatch out;
  const TarpitRecord* rec = lookup(state);
  if (rec == nullptr) return out;
  out.tarpit_id = rec->tarpit_id;
  if (!rec->actions.empty() && zeta <= cfg_.p_reuse) {
    out.kind = Dispatch::Kind::kReuse;
    out.event = rec->actions[rng.uniform_index(rec->actions.size())];
  }
  return out;
}

namespace {

json event_to_json(const UiEvent& ev) {
  json j;
  j["type"] = to_string(ev.type);
  j["bounds"] = {ev.bounds.left, ev.bounds.top, ev.bounds.right, ev.bounds.bottom};
  if (ev.payload.has_value()) j["payload"] = *ev.payload;
  return j;
}

UiEvent event_from_json(const json& j) {
  UiEvent ev;
  const auto type = interaction_from_string(j.at("type").get<std::string>());
  if (!type) throw std::runtime_error("memory: unknown event type " + j.at("type").dump());
  ev.type = *type;
  const auto& b = j.at("bounds");
  ev.bounds = Rect{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
  if (j.contains("payload")) ev.payload = j.at("payload").get<std::string>();
  return ev;
}

}  // namespace

std::string TarpitMemory::export_json() const {
  json out = json::array();
  for (const TarpitRecord& rec : records_) {
    json r;
    r["tarpit_id"] = rec.tarpit_id;
    r["screenshot_hash"] = rec.representative_hash.to_hex();
    r["actions"] = json::array();
    for (const UiEvent& ev : rec.actions) r["actions"].push_back(event_to_json(ev));
    out.push_back(std::move(r));
  }
  return out.dump(2) + "\n";
}

void TarpitMemory::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("TarpitMemory::save: cannot open " + path);
  out << export_json();
}

TarpitMemory TarpitMemory::load(const std::string& path, MemoryConfig cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("TarpitMemory::load: cannot open " + path);
  json doc = json::parse(in);
  TarpitMemory mem(cfg);
  for (const json& r : doc) {
    TarpitRecord rec;
    rec.tarpit_id = r.at("tarpit_id").get<int>();
    rec.representative_hash = PHash::from_hex(r.at("screenshot_hash").get<std::string>());
    for (const json& a : r.at("actions")) rec.actions.push_back(event_from_json(a));
    mem.records_.push_back(std::move(rec));
  }
  return mem;
}

}  // namespace tarpit
