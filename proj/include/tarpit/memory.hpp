#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tarpit/phash.hpp"
#include "tarpit/rng.hpp"
#include "tarpit/ui_model.hpp"

namespace tarpit {

struct MemoryConfig {
  double theta_mem = 0.99;  // match threshold for stored tarpits, (0, 1]
  double p_reuse = 0.8;     // probability of replaying a remembered escape, [0, 1]
};

struct TarpitRecord {
  int tarpit_id = 0;
  PHash representative_hash;             // hash of the first state that formed the record
  std::optional<UiState> representative; // absent for records loaded from disk
  std::vector<UiEvent> actions;          // successful escape events, deduplicated
};

// Campaign-scoped store of tarpits and the events that escaped them.
class TarpitMemory {
 public:
  explicit TarpitMemory(MemoryConfig cfg);

  const MemoryConfig& config() const { return cfg_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<TarpitRecord>& records() const { return records_; }

  // Record whose representative matches the state at theta_mem; ties go to the
  // lowest tarpit id (records are scanned in creation order). Null on miss.
  const TarpitRecord* lookup(const UiState& state) const;
  const TarpitRecord* lookup(PHash hash) const;

  // Associates a successful escape with the matching record, creating a new
  // record (representative = this state) when none matches.
  void record_escape(const UiState& state, const UiEvent& event);

  struct Dispatch {
    enum class Kind { kReuse, kDelegate };
    Kind kind = Kind::kDelegate;
    std::optional<UiEvent> event;  // set for kReuse
    int tarpit_id = -1;            // matching record, -1 if none
  };

  // Reuse a uniformly sampled remembered escape when a record matches and
  // zeta <= p_reuse; otherwise delegate to the advisor.
  Dispatch dispatch(const UiState& state, double zeta, Rng& rng) const;

  std::string export_json() const;  // pretty-printed, stable ordering
  void save(const std::string& path) const;
  static TarpitMemory load(const std::string& path, MemoryConfig cfg);

 private:
  MemoryConfig cfg_;
  std::vector<TarpitRecord> records_;
};

}  // namespace tarpit
