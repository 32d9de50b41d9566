#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "tarpit/phash.hpp"
#include "tarpit/ui_model.hpp"

namespace tarpit {

struct DetectorConfig {
  int window = 8;      // number of trailing states examined, >= 2
  double theta = 0.95; // similarity threshold, in (0, 1]
};

// Append-only history of observed UI states. Screenshot hashes are computed on
// append (memoized per bitmap, since the simulator shares render buffers) so
// detection never rehashes.
class StateSequence {
 public:
  void append(UiState state);

  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }
  const UiState& state_at(std::size_t i) const { return states_.at(i); }
  const UiState& back() const { return states_.back(); }
  PHash hash_at(std::size_t i) const { return hashes_.at(i); }

 private:
  std::vector<UiState> states_;
  std::vector<PHash> hashes_;
  std::unordered_map<const Bitmap*, PHash> memo_;
};

// True iff the last cfg.window states are pairwise-adjacent similar at
// cfg.theta. Sequences shorter than the window never trip detection.
bool has_tarpit(const StateSequence& seq, const DetectorConfig& cfg);

}  // namespace tarpit
