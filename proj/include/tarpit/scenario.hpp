#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "tarpit/simulator.hpp"

namespace tarpit {

// Raised for unreadable, malformed or semantically invalid scenario files.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict JSON codec for app models. Unknown keys are errors so typos in
// hand-written scenarios fail loudly instead of silently changing behavior.
AppModel scenario_from_json(const std::string& json_text);
std::string scenario_to_json(const AppModel& model);

AppModel load_scenario(const std::filesystem::path& path);
void save_scenario(const AppModel& model, const std::filesystem::path& path);

// The four-screen subscription app used throughout the docs: a library screen
// that arms a short-lived multi-select flag, a 70-action preview tarpit whose
// subscribe exit behaves differently while the flag lives, a fragile 80-action
// detail screen that crashes on back while armed, and a harmless detail screen
// reached when unarmed.
AppModel motivating_example();

struct BenchmarkParams {
  int n_screens = 12;          // [2, 64]
  double tarpit_factor = 0.85; // [0, 1): target self-loop fraction per screen
  std::uint64_t seed = 0;
};

// Deterministic synthetic app: a forward chain of screens with one declared
// advance exit each, backward-biased side exits, sparse crash placements on
// the deeper half, and densities controlled by tarpit_factor. Identical
// params give byte-identical scenarios.
AppModel generate_benchmark(const BenchmarkParams& params);

}  // namespace tarpit
