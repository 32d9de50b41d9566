#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tarpit/bitmap.hpp"
#include "tarpit/phash.hpp"

namespace tarpit {

struct Rect {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  bool operator==(const Rect&) const = default;

  // Integer center with floor division; lies inside the rect by the edge-
  // inclusive containment rule below.
  int center_x() const { return (left + right) / 2; }
  int center_y() const { return (top + bottom) / 2; }

  bool contains(int x, int y) const {
    return x >= left && x <= right && y >= top && y <= bottom;
  }
};

// Interaction kinds in their canonical enumeration order; action ids are
// assigned by iterating a widget's interactions in this order.
enum class Interaction : std::uint8_t { kClick, kLongClick, kScroll, kSwipe, kTextInput, kBack };

inline constexpr Interaction kAllInteractions[] = {
    Interaction::kClick, Interaction::kLongClick, Interaction::kScroll,
    Interaction::kSwipe, Interaction::kTextInput, Interaction::kBack,
};

const char* to_string(Interaction i);
std::optional<Interaction> interaction_from_string(const std::string& s);

struct Widget {
  int widget_id = 0;
  Rect bounds;
  std::string text;
  std::string resource_id;
  std::string content_description;
  bool enabled = true;
  std::vector<Interaction> interactions;  // non-empty, canonical order, no dupes

  bool operator==(const Widget&) const = default;

  bool has_interaction(Interaction i) const;
  // Human-readable label used in prompts: text/resource-id/description when
  // present, otherwise the bounds.
  std::string describe() const;
};

struct UiEvent {
  int action_id = 0;
  Interaction type = Interaction::kClick;
  Rect bounds;  // back events carry the whole-screen rect
  std::optional<std::string> payload;  // text_input only

  bool operator==(const UiEvent&) const = default;
};

// Snapshot of the app UI after an executed event. true_screen_id is simulator
// ground truth for the harness (metrics, oracle wiring); engine decision logic
// works from the screenshot and widgets only.
struct UiState {
  std::shared_ptr<const Bitmap> screenshot;
  std::shared_ptr<const std::vector<Widget>> widgets;
  std::string true_screen_id;

  const Bitmap& image() const { return *screenshot; }
  const std::vector<Widget>& widget_list() const { return *widgets; }
};

struct ActionSpace {
  std::vector<UiEvent> events;     // dense: events[i].action_id == i
  std::vector<Widget> widgets;     // surviving widgets in linearized order
  std::vector<int> widget_index;   // per event: index into widgets, -1 = synthetic back

  std::size_t size() const { return events.size(); }
  const UiEvent& at(int action_id) const;
  // Widget behind an event, nullptr for the synthetic global back.
  const Widget* source(int action_id) const;
  // The back event of this space (synthetic one, or the first widget back).
  const UiEvent& back_event() const;
};

// Enabled widgets that survive occlusion filtering: a widget is dropped iff
// its center lies within the bounds of any other enabled widget. Input order
// is preserved.
std::vector<Widget> get_valid_widgets(const UiState& state);

// Stable order: (bounds.top, bounds.left, widget_id).
std::vector<Widget> linearize(std::vector<Widget> widgets);

// One event per (valid widget, interaction) in linearized order, then one
// synthetic whole-screen back event unless some widget already exposes back.
ActionSpace build_action_space(const UiState& state);

}  // namespace tarpit
