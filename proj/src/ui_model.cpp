#include "tarpit/ui_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace tarpit {

const char* to_string(Interaction i) {
  switch (i) {
    case Interaction::kClick: return "click";
    case Interaction::kLongClick: return "long_click";
    case Interaction::kScroll: return "scroll";
    case Interaction::kSwipe: return "swipe";
    case Interaction::kTextInput: return "text_input";
    case Interaction::kBack: return "back";
  }
  return "?";
}

std::optional<Interaction> interaction_from_string(const std::string& s) {
  for (Interaction i : kAllInteractions) {
    if (s == to_string(i)) return i;
  }
  return std::nullopt;
}

bool Widget::has_interaction(Interaction i) const {
  return std::find(interactions.begin(), interactions.end(), i) != interactions.end();
}

std::string Widget::describe() const {
  std::string out;
  if (!text.empty()) out += "\"" + text + "\"";
  if (!resource_id.empty()) {
    if (!out.empty()) out += " ";
    out += "id=" + resource_id;
  }
  if (!content_description.empty()) {
    if (!out.empty()) out += " ";
    out += "desc=" + content_description;
  }
  if (out.empty()) {
    out = "unlabeled widget at (" + std::to_string(bounds.left) + "," + std::to_string(bounds.top) +
          "," + std::to_string(bounds.right) + "," + std::to_string(bounds.bottom) + ")";
  }
  return out;
}

const UiEvent& ActionSpace::at(int action_id) const {
  if (action_id < 0 || action_id >= static_cast<int>(events.size())) {
    throw std::out_of_range("ActionSpace: action id " + std::to_string(action_id) +
                            " outside [0, " + std::to_string(events.size()) + ")");
  }
  return events[static_cast<std::size_t>(action_id)];
}

const Widget* ActionSpace::source(int action_id) const {
  const int idx = widget_index.at(static_cast<std::size_t>(at(action_id).action_id));
  return idx < 0 ? nullptr : &widgets[static_cast<std::size_t>(idx)];
}

const UiEvent& ActionSpace::back_event() const {
  for (auto it = events.rbegin(); it != events.rend(); ++it) {
    if (it->type == Interaction::kBack) return *it;
  }
  throw std::logic_error("ActionSpace: no back event present");
}

std::vector<Widget> get_valid_widgets(const UiState& state) {
  std::vector<const Widget*> candidates;
  for (const Widget& w : state.widget_list()) {
    if (w.enabled && !w.interactions.empty()) candidates.push_back(&w);
  }
  std::vector<Widget> out;
  for (const Widget* w : candidates) {
    const int cx = w->bounds.center_x();
    const int cy = w->bounds.center_y();
    bool covered = false;
    for (const Widget* other : candidates) {
      if (other != w && other->bounds.contains(cx, cy)) {
        covered = true;
        break;
      }
    }
    if (!covered) out.push_back(*w);
  }
  return out;
}

std::vector<Widget> linearize(std::vector<Widget> widgets) {
  std::stable_sort(widgets.begin(), widgets.end(), [](const Widget& a, const Widget& b) {
    if (a.bounds.top != b.bounds.top) return a.bounds.top < b.bounds.top;
    if (a.bounds.left != b.bounds.left) return a.bounds.left < b.bounds.left;
    return a.widget_id < b.widget_id;
  });
  return widgets;
}

ActionSpace build_action_space(const UiState& state) {
  ActionSpace space;
  space.widgets = linearize(get_valid_widgets(state));

  bool have_back = false;
  int next_id = 0;
  for (std::size_t wi = 0; wi < space.widgets.size(); ++wi) {
    const Widget& w = space.widgets[wi];
    for (Interaction i : kAllInteractions) {
      if (!w.has_interaction(i)) continue;
      UiEvent ev;
      ev.action_id = next_id++;
      ev.type = i;
      ev.bounds = w.bounds;
      if (i == Interaction::kBack) {
        // Back is a global gesture; its event always spans the whole screen.
        ev.bounds = Rect{0, 0, state.image().width - 1, state.image().height - 1};
        have_back = true;
      }
      space.events.push_back(ev);
      space.widget_index.push_back(static_cast<int>(wi));
    }
  }
  if (!have_back) {
    UiEvent ev;
    ev.action_id = next_id++;
    ev.type = Interaction::kBack;
    ev.bounds = Rect{0, 0, state.image().width - 1, state.image().height - 1};
    space.events.push_back(ev);
    space.widget_index.push_back(-1);
  }
  return space;
}

}  // namespace tarpit
