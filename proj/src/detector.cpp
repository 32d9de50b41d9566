#include "tarpit/detector.hpp"

#include <stdexcept>

namespace tarpit {

void StateSequence::append(UiState state) {
  const Bitmap* key = state.screenshot.get();
  if (key == nullptr) throw std::invalid_argument("StateSequence: state without screenshot");
  auto it = memo_.find(key);
  if (it == memo_.end()) it = memo_.emplace(key, dhash(*key)).first;
  hashes_.push_back(it->second);
  states_.push_back(std::move(state));
}

bool has_tarpit(const StateSequence& seq, const DetectorConfig& cfg) {
  if (cfg.window < 2) {
    throw std::invalid_argument("has_tarpit: window must be >= 2, got " +
                                std::to_string(cfg.window));
  }
  if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) {
    throw std::invalid_argument("has_tarpit: theta must be in (0, 1]");
  }
  const std::size_t n = seq.size();
  const auto k = static_cast<std::size_t>(cfg.window);
  if (n < k) return false;
  for (std::size_t i = n - k; i + 1 < n; ++i) {
    if (!is_ui_similar(seq.hash_at(i), seq.hash_at(i + 1), cfg.theta)) return false;
  }
  return true;
}

}  // namespace tarpit
