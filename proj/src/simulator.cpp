#include "tarpit/simulator.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace tarpit {
namespace {

// Background palette, indexed cyclically per 20x40 downsample cell. Adjacent
// tones differ by at least 12 while widget tints stay within +-4, so widget
// content never flips a hash bit: every state of one screen, and every screen
// sharing a visual group, hashes identically.
constexpr int kPalette[9] = {112, 76, 64, 88, 136, 40, 52, 100, 124};

// Per-row palette rotation is a linear form of the group's two base-9 digits.
// These coefficient pairs vanish simultaneously for at most two rows over any
// nonzero digit difference, so distinct groups disagree in at least six rows.
// Combined with the palette order (rotation distance >= 3 bits per row) that
// bounds cross-group similarity by 1 - 18/64, well under the 0.80 calibration
// ceiling.
constexpr int kRowForm[8][2] = {
    {4, 8}, {2, 7}, {7, 0}, {1, 4}, {3, 1}, {3, 5}, {5, 8}, {1, 6},
};

constexpr int kCellWidth = kScreenWidth / 9;    // 20
constexpr int kCellHeight = kScreenHeight / 8;  // 40

int strip_tone(std::uint64_t frame) { return 70 + 6 * static_cast<int>(frame % 8); }

int row_rotation(int group, int row) {
  const int d0 = group % 9;
  const int d1 = group / 9;
  return (kRowForm[row][0] * d0 + kRowForm[row][1] * d1) % 9;
}

int base_tone(int group, int x, int y) {
  const int row = y / kCellHeight;
  const int col = x / kCellWidth;
  return kPalette[(col + row_rotation(group, row)) % 9];
}

// Small deterministic mixer for widget tints.
std::uint32_t mix32(std::uint32_t a, std::uint32_t b) {
  std::uint64_t v = (static_cast<std::uint64_t>(a) << 32) | (b ^ 0x9e3779b9u);
  v ^= v >> 33;
  v *= 0xff51afd7ed558ccdULL;
  v ^= v >> 33;
  v *= 0xc4ceb9fe1a85ec53ULL;
  v ^= v >> 33;
  return static_cast<std::uint32_t>(v);
}

Bitmap render_background(int group, std::uint64_t frame) {
  Bitmap img(kScreenWidth, kScreenHeight);
  const int strip = strip_tone(frame);
  for (int y = 0; y < kScreenHeight; ++y) {
    for (int x = 0; x < kScreenWidth; ++x) {
      // The status strip shifts every top-row cell equally with the frame
      // counter: pixels change over time, hash bits never do.
      const int tone = y < kStatusStripHeight ? strip : base_tone(group, x, y);
      img.pixels[static_cast<std::size_t>(y) * kScreenWidth + x] =
          static_cast<std::uint8_t>(tone);
    }
  }
  return img;
}

void paint_widget(Bitmap& img, const Widget& w, std::uint32_t salt, int group) {
  const int tint =
      static_cast<int>(mix32(salt, static_cast<std::uint32_t>(w.widget_id)) % 9) - 4;
  const int y0 = std::max(w.bounds.top, kStatusStripHeight);
  const int y1 = std::min(w.bounds.bottom, kScreenHeight - 1);
  const int x0 = std::max(w.bounds.left, 0);
  const int x1 = std::min(w.bounds.right, kScreenWidth - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const bool border = y == y0 || y == y1 || x == x0 || x == x1;
      const int delta = border ? -4 : tint;
      const int tone = base_tone(group, x, y) + delta;
      img.pixels[static_cast<std::size_t>(y) * kScreenWidth + x] =
          static_cast<std::uint8_t>(tone);
    }
  }
}

std::string screen_list(const AppModel& model) {
  std::string out;
  for (const auto& s : model.screens) {
    if (!out.empty()) out += ", ";
    out += s.id;
  }
  return out;
}

}  // namespace

Effect Effect::goto_screen(std::string target) {
  Effect e;
  e.kind = Kind::kGoto;
  e.target = std::move(target);
  return e;
}

Effect Effect::self_loop() { return Effect{}; }

Effect Effect::crash(std::string signature) {
  Effect e;
  e.kind = Kind::kCrash;
  e.signature = std::move(signature);
  return e;
}

Effect Effect::back_pop() {
  Effect e;
  e.kind = Kind::kBackPop;
  return e;
}

Effect Effect::set_flag(std::string flag, int ttl) {
  Effect e;
  e.kind = Kind::kSetFlag;
  e.flag = std::move(flag);
  e.ttl = ttl;
  return e;
}

Effect Effect::guarded(std::string flag, Effect then_branch, Effect else_branch) {
  Effect e;
  e.kind = Kind::kGuarded;
  e.flag = std::move(flag);
  e.branches.push_back(std::move(then_branch));
  e.branches.push_back(std::move(else_branch));
  return e;
}

const ScreenDef* AppModel::find_screen(const std::string& id) const {
  for (const auto& s : screens) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

namespace {

void validate_effect(const AppModel& model, const Effect& e, const std::string& where,
                     bool nested) {
  const std::set<std::string> declared(model.flags.begin(), model.flags.end());
  auto need_flag = [&](const std::string& f) {
    if (!declared.count(f)) {
      throw std::runtime_error(where + ": flag '" + f + "' is not declared");
    }
  };
  switch (e.kind) {
    case Effect::Kind::kGoto:
      if (!model.find_screen(e.target)) {
        throw std::runtime_error(where + ": goto target '" + e.target +
                                 "' does not exist (screens: " + screen_list(model) + ")");
      }
      break;
    case Effect::Kind::kCrash:
      if (e.signature.empty()) {
        throw std::runtime_error(where + ": crash effect needs a signature");
      }
      break;
    case Effect::Kind::kSetFlag:
      need_flag(e.flag);
      if (e.ttl == 0 || e.ttl < -1) {
        throw std::runtime_error(where + ": set_flag ttl must be positive or -1");
      }
      break;
    case Effect::Kind::kGuarded:
      if (nested) {
        throw std::runtime_error(where + ": guarded effects cannot nest");
      }
      need_flag(e.flag);
      if (e.branches.size() != 2) {
        throw std::runtime_error(where + ": guarded effect needs then and else branches");
      }
      for (const auto& b : e.branches) validate_effect(model, b, where, true);
      break;
    case Effect::Kind::kSelfLoop:
    case Effect::Kind::kBackPop:
      break;
  }
  for (const auto& s : e.sets) {
    need_flag(s.flag);
    if (s.ttl == 0 || s.ttl < -1) {
      throw std::runtime_error(where + ": flag set ttl must be positive or -1");
    }
  }
  for (const auto& c : e.clears) need_flag(c);
}

}  // namespace

void validate_model(const AppModel& model) {
  if (model.name.empty()) throw std::runtime_error("app model needs a name");
  if (model.screens.empty()) throw std::runtime_error("app model needs at least one screen");
  std::set<std::string> ids;
  for (const auto& s : model.screens) {
    const std::string where = "screen '" + s.id + "'";
    if (s.id.empty()) throw std::runtime_error("screen id cannot be empty");
    if (!ids.insert(s.id).second) {
      throw std::runtime_error("duplicate screen id '" + s.id + "'");
    }
    if (s.visual_group < 1 || s.visual_group > kMaxVisualGroup) {
      throw std::runtime_error(where + ": visual_group must be in [1, 80]");
    }
    std::set<int> wids;
    for (const auto& w : s.widgets) {
      if (!wids.insert(w.widget_id).second) {
        throw std::runtime_error(where + ": duplicate widget id " +
                                 std::to_string(w.widget_id));
      }
      if (w.bounds.left < 0 || w.bounds.top < 0 || w.bounds.right >= kScreenWidth ||
          w.bounds.bottom >= kScreenHeight || w.bounds.left > w.bounds.right ||
          w.bounds.top > w.bounds.bottom) {
        throw std::runtime_error(where + ": widget " + std::to_string(w.widget_id) +
                                 " bounds fall outside the 180x320 screen");
      }
      if (w.interactions.empty()) {
        throw std::runtime_error(where + ": widget " + std::to_string(w.widget_id) +
                                 " declares no interactions");
      }
      std::set<Interaction> seen;
      for (auto i : w.interactions) {
        if (!seen.insert(i).second) {
          throw std::runtime_error(where + ": widget " + std::to_string(w.widget_id) +
                                   " repeats an interaction");
        }
      }
    }
    for (const auto& [wid, inter] : s.escape_actions) {
      const auto it = std::find_if(s.widgets.begin(), s.widgets.end(),
                                   [&](const Widget& w) { return w.widget_id == wid; });
      if (it == s.widgets.end() || !it->has_interaction(inter)) {
        throw std::runtime_error(where + ": escape action (" + std::to_string(wid) + ", " +
                                 to_string(inter) + ") does not match a widget interaction");
      }
    }
  }
  if (!model.find_screen(model.initial_screen)) {
    throw std::runtime_error("initial screen '" + model.initial_screen +
                             "' does not exist (screens: " + screen_list(model) + ")");
  }
  std::set<std::tuple<std::string, int, int>> keys;
  for (const auto& t : model.transitions) {
    const std::string where = "transition (" + t.screen + ", " +
                              std::to_string(t.widget_id) + ", " + to_string(t.interaction) +
                              ")";
    const ScreenDef* s = model.find_screen(t.screen);
    if (!s) throw std::runtime_error(where + ": screen does not exist");
    const auto it = std::find_if(s->widgets.begin(), s->widgets.end(),
                                 [&](const Widget& w) { return w.widget_id == t.widget_id; });
    if (it == s->widgets.end()) throw std::runtime_error(where + ": widget does not exist");
    if (!it->has_interaction(t.interaction)) {
      throw std::runtime_error(where + ": widget does not expose this interaction");
    }
    if (!keys.insert({t.screen, t.widget_id, static_cast<int>(t.interaction)}).second) {
      throw std::runtime_error(where + ": duplicate transition");
    }
    validate_effect(model, t.effect, where, false);
  }
}

Bitmap render_screen(const ScreenDef& screen, std::uint64_t frame) {
  Bitmap img = render_background(screen.visual_group, frame);
  for (const auto& w : screen.widgets) {
    if (w.enabled) paint_widget(img, w, screen.render_salt, screen.visual_group);
  }
  return img;
}

Bitmap render_restart_splash(std::uint64_t frame) { return render_background(0, frame); }

AppRuntime::AppRuntime(const AppModel& model, Options options) : model_(&model) {
  validate_model(model);
  for (const auto& s : model.screens) {
    ScreenRuntime rt;
    rt.def = &s;
    rt.widgets = std::make_shared<const std::vector<Widget>>(s.widgets);
    for (int f = 0; f < 8; ++f) {
      rt.frames[f] = std::make_shared<const Bitmap>(render_screen(s, f));
    }
    rt.hash = dhash(*rt.frames[0]);
    screens_.emplace(s.id, std::move(rt));
  }
  for (int f = 0; f < 8; ++f) {
    splash_frames_[f] = std::make_shared<const Bitmap>(render_restart_splash(f));
  }
  run_calibration();

  initial_ = model.initial_screen;
  options_ = std::move(options);
  if (options_.start_screen && !model.find_screen(*options_.start_screen)) {
    throw std::runtime_error("start screen '" + *options_.start_screen +
                             "' does not exist");
  }
  for (const auto& f : options_.start_flags) {
    if (std::find(model.flags.begin(), model.flags.end(), f.flag) == model.flags.end()) {
      throw std::runtime_error("start flag '" + f.flag + "' is not declared");
    }
  }
  reset();
}

void AppRuntime::reset() {
  current_ = options_.start_screen.value_or(initial_);
  stack_.clear();
  // Starting mid-app models having navigated there, so back has somewhere to
  // pop to.
  if (current_ != initial_) stack_.push_back(initial_);
  flags_.clear();
  for (const auto& f : options_.start_flags) flags_[f.flag] = f.ttl;
  frame_ = 0;
  crash_log_.clear();
  state_ = make_state(current_, false);
}

bool AppRuntime::flag_alive(const std::string& name) const { return flags_.count(name) > 0; }

UiState AppRuntime::make_state(const std::string& screen_id, bool splash) {
  const ScreenRuntime& rt = screens_.at(screen_id);
  UiState st;
  st.screenshot = splash ? splash_frames_[frame_ % 8] : rt.frames[frame_ % 8];
  st.widgets = rt.widgets;
  st.true_screen_id = screen_id;
  return st;
}

const Effect* AppRuntime::find_transition(const std::string& screen, int widget_id,
                                          Interaction i) const {
  for (const auto& t : model_->transitions) {
    if (t.screen == screen && t.widget_id == widget_id && t.interaction == i) {
      return &t.effect;
    }
  }
  return nullptr;
}

void AppRuntime::apply_flag_riders(const Effect& effect) {
  for (const auto& s : effect.sets) flags_[s.flag] = s.ttl;
  for (const auto& c : effect.clears) flags_.erase(c);
}

StepResult AppRuntime::execute(const UiEvent& ev) {
  const ScreenRuntime& rt = screens_.at(current_);
  // Flags set by this very event are exempt from this step's ttl decrement.
  std::set<std::string> set_now;

  const Effect* effect = nullptr;
  if (ev.type == Interaction::kBack) {
    // Back routes through the screen's lowest-id back-exposing widget when one
    // exists; otherwise (or without an explicit transition) it pops.
    const Widget* back_widget = nullptr;
    for (const auto& w : rt.def->widgets) {
      if (w.enabled && w.has_interaction(Interaction::kBack) &&
          (!back_widget || w.widget_id < back_widget->widget_id)) {
        back_widget = &w;
      }
    }
    if (back_widget) {
      effect = find_transition(current_, back_widget->widget_id, Interaction::kBack);
    }
    static const Effect kDefaultBack = Effect::back_pop();
    if (!effect) effect = &kDefaultBack;
  } else {
    // Non-back events resolve by exact bounds + interaction; anything else
    // (stale bounds from another screen, disabled widget) is a no-op self-loop.
    const Widget* hit = nullptr;
    for (const auto& w : rt.def->widgets) {
      if (w.enabled && w.bounds == ev.bounds && w.has_interaction(ev.type) &&
          (!hit || w.widget_id < hit->widget_id)) {
        hit = &w;
      }
    }
    if (hit) effect = find_transition(current_, hit->widget_id, ev.type);
    static const Effect kDefaultSelf = Effect::self_loop();
    if (!effect) effect = &kDefaultSelf;
  }

  // Guarded effects read the flag before any rider or decrement of this step.
  const Effect* outer = effect;
  const Effect* chosen = effect;
  if (effect->kind == Effect::Kind::kGuarded) {
    chosen = flag_alive(effect->flag) ? &effect->branches[0] : &effect->branches[1];
  }
  for (const auto& s : outer->sets) set_now.insert(s.flag);
  apply_flag_riders(*outer);
  if (chosen != outer) {
    for (const auto& s : chosen->sets) set_now.insert(s.flag);
    apply_flag_riders(*chosen);
  }

  ++frame_;
  StepResult result;
  switch (chosen->kind) {
    case Effect::Kind::kGoto:
      stack_.push_back(current_);
      current_ = chosen->target;
      break;
    case Effect::Kind::kSetFlag:
      flags_[chosen->flag] = chosen->ttl;
      set_now.insert(chosen->flag);
      break;
    case Effect::Kind::kBackPop:
      if (!stack_.empty()) {
        current_ = stack_.back();
        stack_.pop_back();
      }
      break;
    case Effect::Kind::kCrash: {
      CrashRecord rec;
      rec.signature = chosen->signature;
      rec.screen = current_;
      rec.event = ev;
      crash_log_.push_back(rec);
      result.crashed = true;
      result.crash = rec;
      // App restart: fresh process at the initial screen, flags and stack
      // gone. The restart splash renders outside every scenario visual group
      // so detector windows cannot straddle a crash.
      current_ = initial_;
      stack_.clear();
      flags_.clear();
      set_now.clear();
      break;
    }
    case Effect::Kind::kSelfLoop:
    case Effect::Kind::kGuarded:
      break;
  }

  for (auto it = flags_.begin(); it != flags_.end();) {
    if (it->second > 0 && !set_now.count(it->first) && --it->second == 0) {
      it = flags_.erase(it);
    } else {
      ++it;
    }
  }

  state_ = make_state(current_, result.crashed);
  result.state = state_;
  return result;
}

void AppRuntime::run_calibration() const {
  // Belt-and-braces check of the rendering contract on every runtime build:
  // same visual group reads as the same screen, different groups (and the
  // restart splash) always read as different screens.
  std::vector<std::pair<const ScreenDef*, PHash>> items;
  for (const auto& [id, rt] : screens_) items.push_back({rt.def, rt.hash});
  const PHash splash = dhash(*splash_frames_[0]);
  auto fail = [](const std::string& a, const std::string& b, double sim, const char* what) {
    std::ostringstream os;
    os << "render calibration failed: screens '" << a << "' and '" << b << "' have similarity "
       << sim << " but must be " << what;
    throw std::runtime_error(os.str());
  };
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const double sim = similarity(items[i].second, items[j].second);
      const bool same_group = items[i].first->visual_group == items[j].first->visual_group;
      if (same_group && sim < 0.97) {
        fail(items[i].first->id, items[j].first->id, sim, ">= 0.97 (same visual group)");
      }
      if (!same_group && sim > 0.80) {
        fail(items[i].first->id, items[j].first->id, sim, "<= 0.80 (different visual groups)");
      }
    }
    const double sim = similarity(items[i].second, splash);
    if (sim > 0.80) {
      fail(items[i].first->id, "<restart splash>", sim, "<= 0.80 (different visual groups)");
    }
  }
}

}  // namespace tarpit
