#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tarpit/phash.hpp"
#include "tarpit/ui_model.hpp"

namespace tarpit {

inline constexpr int kScreenWidth = 180;
inline constexpr int kScreenHeight = 320;
inline constexpr int kStatusStripHeight = 16;
// Visual group ids map to a two-digit base-9 barcode; 0 is reserved for the
// post-crash restart splash.
inline constexpr int kMaxVisualGroup = 80;

// Transition outcome. Guarded effects carry exactly two non-guarded branches
// (then, else) selected by a flag. Any effect may additionally set or clear
// flags; a set with ttl > 0 expires after that many further executed events.
struct FlagSet {
  std::string flag;
  int ttl = -1;  // -1: permanent until cleared

  bool operator==(const FlagSet&) const = default;
};

struct Effect {
  enum class Kind { kGoto, kSelfLoop, kCrash, kBackPop, kSetFlag, kGuarded };

  Kind kind = Kind::kSelfLoop;
  std::string target;     // kGoto
  std::string signature;  // kCrash
  std::string flag;       // kSetFlag: flag to set; kGuarded: condition
  int ttl = -1;           // kSetFlag
  std::vector<Effect> branches;  // kGuarded: [then, else]
  std::vector<FlagSet> sets;
  std::vector<std::string> clears;

  bool operator==(const Effect&) const = default;

  static Effect goto_screen(std::string target);
  static Effect self_loop();
  static Effect crash(std::string signature);
  static Effect back_pop();
  static Effect set_flag(std::string flag, int ttl = -1);
  static Effect guarded(std::string flag, Effect then_branch, Effect else_branch);
};

struct ScreenDef {
  std::string id;
  int visual_group = 1;  // [1, kMaxVisualGroup]
  std::uint32_t render_salt = 0;
  bool tarpit_ground_truth = false;
  std::vector<Widget> widgets;
  // Declared escape actions: ground truth consumed by the oracle advisor and
  // the metrics, never by the engine.
  std::vector<std::pair<int, Interaction>> escape_actions;

  bool operator==(const ScreenDef&) const = default;
};

struct Transition {
  std::string screen;
  int widget_id = 0;
  Interaction interaction = Interaction::kClick;
  Effect effect;

  bool operator==(const Transition&) const = default;
};

struct AppModel {
  std::string name;
  std::string initial_screen;
  std::vector<std::string> flags;  // declared flag names
  std::vector<ScreenDef> screens;
  std::vector<Transition> transitions;

  bool operator==(const AppModel&) const = default;

  const ScreenDef* find_screen(const std::string& id) const;
};

// Structural checks: unique ids, references resolve, bounds within the screen,
// guarded effects one level deep with declared flags. Throws on violation.
void validate_model(const AppModel& model);

struct CrashRecord {
  std::string signature;
  std::string screen;  // screen the crash fired on
  UiEvent event;
  long event_index = -1;  // executed-event count at crash time (set by callers)
};

struct StepResult {
  UiState state;
  bool crashed = false;
  std::optional<CrashRecord> crash;
};

// Deterministic execution environment for one campaign: owns current screen,
// navigation stack, flag store and frame counter, and renders states whose
// hash behavior is controlled entirely by visual_group.
class AppRuntime {
 public:
  struct Options {
    std::optional<std::string> start_screen;  // default: model initial
    std::vector<FlagSet> start_flags;
  };

  explicit AppRuntime(const AppModel& model, Options options = {});

  const AppModel& model() const { return *model_; }
  const std::string& current_screen_id() const { return current_; }
  const UiState& current_state() const { return state_; }
  std::uint64_t frame_counter() const { return frame_; }
  const std::vector<CrashRecord>& crash_log() const { return crash_log_; }
  const std::vector<std::string>& nav_stack() const { return stack_; }
  bool flag_alive(const std::string& name) const;

  StepResult execute(const UiEvent& ev);

  // Restores the construction-time start state (screen, stack, flags, frame
  // counter, crash log); rendered frames are kept, so this is cheap.
  void reset();

 private:
  struct ScreenRuntime {
    const ScreenDef* def = nullptr;
    std::shared_ptr<const std::vector<Widget>> widgets;
    // One render per status-strip tone; the strip cycles with the frame
    // counter but never changes the hash.
    std::array<std::shared_ptr<const Bitmap>, 8> frames;
    PHash hash;
  };

  UiState make_state(const std::string& screen_id, bool splash);
  const Effect* find_transition(const std::string& screen, int widget_id, Interaction i) const;
  void apply_flag_riders(const Effect& effect);
  void run_calibration() const;

  const AppModel* model_;
  Options options_;
  std::map<std::string, ScreenRuntime> screens_;
  std::array<std::shared_ptr<const Bitmap>, 8> splash_frames_;
  std::string current_;
  std::string initial_;
  std::vector<std::string> stack_;
  std::map<std::string, int> flags_;  // name -> remaining ttl, -1 permanent
  std::uint64_t frame_ = 0;
  UiState state_;
  std::vector<CrashRecord> crash_log_;
};

// Renders a screen the way AppRuntime does; exposed for calibration tests.
Bitmap render_screen(const ScreenDef& screen, std::uint64_t frame);
Bitmap render_restart_splash(std::uint64_t frame);

}  // namespace tarpit
