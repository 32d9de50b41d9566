#include "tarpit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tarpit/rng.hpp"

namespace tarpit {
namespace {

using Json = nlohmann::ordered_json;

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ScenarioError(where + ": unknown key '" + key + "'");
    }
  }
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(where + ": missing key '" + key + "'");
  return *it;
}

Interaction parse_interaction(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ScenarioError(where + ": interaction must be a string");
  const auto i = interaction_from_string(j.get<std::string>());
  if (!i) throw ScenarioError(where + ": unknown interaction '" + j.get<std::string>() + "'");
  return *i;
}

Effect effect_from_json(const Json& j, const std::string& where, bool nested) {
  if (!j.is_object()) throw ScenarioError(where + ": effect must be an object");
  check_keys(j, {"kind", "target", "signature", "flag", "ttl", "then", "else", "sets", "clears"},
             where);
  Effect e;
  const std::string kind = require(j, "kind", where).get<std::string>();
  if (kind == "goto") {
    e.kind = Effect::Kind::kGoto;
    e.target = require(j, "target", where).get<std::string>();
  } else if (kind == "self_loop") {
    e.kind = Effect::Kind::kSelfLoop;
  } else if (kind == "crash") {
    e.kind = Effect::Kind::kCrash;
    e.signature = require(j, "signature", where).get<std::string>();
  } else if (kind == "back_pop") {
    e.kind = Effect::Kind::kBackPop;
  } else if (kind == "set_flag") {
    e.kind = Effect::Kind::kSetFlag;
    e.flag = require(j, "flag", where).get<std::string>();
    e.ttl = j.value("ttl", -1);
  } else if (kind == "guarded") {
    if (nested) throw ScenarioError(where + ": guarded effects cannot nest");
    e.kind = Effect::Kind::kGuarded;
    e.flag = require(j, "flag", where).get<std::string>();
    e.branches.push_back(effect_from_json(require(j, "then", where), where + "/then", true));
    e.branches.push_back(effect_from_json(require(j, "else", where), where + "/else", true));
  } else {
    throw ScenarioError(where + ": unknown effect kind '" + kind + "'");
  }
  if (const auto it = j.find("sets"); it != j.end()) {
    for (const auto& s : *it) {
      check_keys(s, {"flag", "ttl"}, where + "/sets");
      FlagSet fs;
      fs.flag = require(s, "flag", where + "/sets").get<std::string>();
      fs.ttl = s.value("ttl", -1);
      e.sets.push_back(std::move(fs));
    }
  }
  if (const auto it = j.find("clears"); it != j.end()) {
    for (const auto& c : *it) e.clears.push_back(c.get<std::string>());
  }
  return e;
}

Json effect_to_json(const Effect& e) {
  Json j = Json::object();
  switch (e.kind) {
    case Effect::Kind::kGoto:
      j["kind"] = "goto";
      j["target"] = e.target;
      break;
    case Effect::Kind::kSelfLoop:
      j["kind"] = "self_loop";
      break;
    case Effect::Kind::kCrash:
      j["kind"] = "crash";
      j["signature"] = e.signature;
      break;
    case Effect::Kind::kBackPop:
      j["kind"] = "back_pop";
      break;
    case Effect::Kind::kSetFlag:
      j["kind"] = "set_flag";
      j["flag"] = e.flag;
      j["ttl"] = e.ttl;
      break;
    case Effect::Kind::kGuarded:
      j["kind"] = "guarded";
      j["flag"] = e.flag;
      j["then"] = effect_to_json(e.branches.at(0));
      j["else"] = effect_to_json(e.branches.at(1));
      break;
  }
  if (!e.sets.empty()) {
    Json sets = Json::array();
    for (const auto& s : e.sets) {
      Json fs;
      fs["flag"] = s.flag;
      if (s.ttl != -1) fs["ttl"] = s.ttl;
      sets.push_back(std::move(fs));
    }
    j["sets"] = std::move(sets);
  }
  if (!e.clears.empty()) j["clears"] = e.clears;
  return j;
}

Widget widget_from_json(const Json& j, const std::string& where) {
  check_keys(j,
             {"id", "bounds", "text", "resource_id", "content_description", "enabled",
              "interactions"},
             where);
  Widget w;
  w.widget_id = require(j, "id", where).get<int>();
  const Json& b = require(j, "bounds", where);
  if (!b.is_array() || b.size() != 4) {
    throw ScenarioError(where + ": bounds must be [left, top, right, bottom]");
  }
  w.bounds = Rect{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
  w.text = j.value("text", "");
  w.resource_id = j.value("resource_id", "");
  w.content_description = j.value("content_description", "");
  w.enabled = j.value("enabled", true);
  for (const auto& i : require(j, "interactions", where)) {
    w.interactions.push_back(parse_interaction(i, where));
  }
  return w;
}

Json widget_to_json(const Widget& w) {
  Json j;
  j["id"] = w.widget_id;
  j["bounds"] = {w.bounds.left, w.bounds.top, w.bounds.right, w.bounds.bottom};
  if (!w.text.empty()) j["text"] = w.text;
  if (!w.resource_id.empty()) j["resource_id"] = w.resource_id;
  if (!w.content_description.empty()) j["content_description"] = w.content_description;
  if (!w.enabled) j["enabled"] = false;
  Json inters = Json::array();
  for (auto i : w.interactions) inters.push_back(to_string(i));
  j["interactions"] = std::move(inters);
  return j;
}

}  // namespace

AppModel scenario_from_json(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ScenarioError("scenario root must be an object");
  check_keys(j, {"name", "initial", "flags", "screens", "transitions"}, "scenario");
  AppModel model;
  model.name = require(j, "name", "scenario").get<std::string>();
  model.initial_screen = require(j, "initial", "scenario").get<std::string>();
  if (const auto it = j.find("flags"); it != j.end()) {
    for (const auto& f : *it) model.flags.push_back(f.get<std::string>());
  }
  for (const auto& sj : require(j, "screens", "scenario")) {
    ScreenDef s;
    const std::string where = "screen '" + sj.value("id", std::string("?")) + "'";
    check_keys(sj, {"id", "visual_group", "render_salt", "tarpit", "widgets", "escape_actions"},
               where);
    s.id = require(sj, "id", where).get<std::string>();
    s.visual_group = require(sj, "visual_group", where).get<int>();
    s.render_salt = sj.value("render_salt", 0u);
    s.tarpit_ground_truth = sj.value("tarpit", false);
    for (const auto& wj : require(sj, "widgets", where)) {
      s.widgets.push_back(widget_from_json(wj, where));
    }
    if (const auto it = sj.find("escape_actions"); it != sj.end()) {
      for (const auto& ej : *it) {
        check_keys(ej, {"widget", "interaction"}, where + "/escape_actions");
        s.escape_actions.emplace_back(
            require(ej, "widget", where).get<int>(),
            parse_interaction(require(ej, "interaction", where), where));
      }
    }
    model.screens.push_back(std::move(s));
  }
  for (const auto& tj : require(j, "transitions", "scenario")) {
    Transition t;
    const std::string where = "transition on screen '" + tj.value("screen", std::string("?")) +
                              "'";
    check_keys(tj, {"screen", "widget", "interaction", "effect"}, where);
    t.screen = require(tj, "screen", where).get<std::string>();
    t.widget_id = require(tj, "widget", where).get<int>();
    t.interaction = parse_interaction(require(tj, "interaction", where), where);
    t.effect = effect_from_json(require(tj, "effect", where), where, false);
    model.transitions.push_back(std::move(t));
  }
  try {
    validate_model(model);
  } catch (const std::exception& e) {
    throw ScenarioError(e.what());
  }
  return model;
}

std::string scenario_to_json(const AppModel& model) {
  Json j;
  j["name"] = model.name;
  j["initial"] = model.initial_screen;
  j["flags"] = model.flags;
  Json screens = Json::array();
  for (const auto& s : model.screens) {
    Json sj;
    sj["id"] = s.id;
    sj["visual_group"] = s.visual_group;
    sj["render_salt"] = s.render_salt;
    sj["tarpit"] = s.tarpit_ground_truth;
    Json widgets = Json::array();
    for (const auto& w : s.widgets) widgets.push_back(widget_to_json(w));
    sj["widgets"] = std::move(widgets);
    Json escapes = Json::array();
    for (const auto& [wid, inter] : s.escape_actions) {
      Json ej;
      ej["widget"] = wid;
      ej["interaction"] = to_string(inter);
      escapes.push_back(std::move(ej));
    }
    sj["escape_actions"] = std::move(escapes);
    screens.push_back(std::move(sj));
  }
  j["screens"] = std::move(screens);
  Json transitions = Json::array();
  for (const auto& t : model.transitions) {
    Json tj;
    tj["screen"] = t.screen;
    tj["widget"] = t.widget_id;
    tj["interaction"] = to_string(t.interaction);
    tj["effect"] = effect_to_json(t.effect);
    transitions.push_back(std::move(tj));
  }
  j["transitions"] = std::move(transitions);
  return j.dump(2) + "\n";
}

AppModel load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  AppModel model = scenario_from_json(buf.str());
  try {
    // Probe runtime construction so render calibration failures surface at
    // load time, not mid-campaign.
    AppRuntime probe(model);
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(e.what());
  }
  return model;
}

void save_scenario(const AppModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ScenarioError("cannot open scenario file for writing: " + path.string());
  out << scenario_to_json(model);
  if (!out) throw ScenarioError("failed writing scenario file: " + path.string());
}

namespace {

Widget make_widget(int id, Rect bounds, std::string text, std::string resource,
                   std::vector<Interaction> interactions) {
  Widget w;
  w.widget_id = id;
  w.bounds = bounds;
  w.text = std::move(text);
  w.resource_id = std::move(resource);
  w.interactions = std::move(interactions);
  return w;
}

}  // namespace

AppModel motivating_example() {
  AppModel app;
  app.name = "motivating";
  app.initial_screen = "library";
  app.flags = {"multi_select"};

  // Library: ten list rows, click only. Row 3 opens the preview and arms the
  // short-lived multi-select mode; everything else is inert.
  ScreenDef library;
  library.id = "library";
  library.visual_group = 1;
  library.render_salt = 101;
  library.tarpit_ground_truth = true;
  for (int i = 0; i < 10; ++i) {
    const int top = 40 + i * 28;
    library.widgets.push_back(make_widget(
        i, Rect{4, top, 176, top + 23},
        i == 3 ? "Select podcasts" : "Podcast " + std::to_string(i),
        "library_row_" + std::to_string(i), {Interaction::kClick}));
  }
  library.escape_actions = {{3, Interaction::kClick}};

  // Preview: a 4x8 grid of episode tiles on click + long_click plus a toolbar
  // exposing all six interactions, 70 actions total. Subscribe and back are
  // the only ways out.
  ScreenDef preview;
  preview.id = "preview";
  preview.visual_group = 2;
  preview.render_salt = 202;
  preview.tarpit_ground_truth = true;
  for (int i = 0; i < 32; ++i) {
    const int col = i % 4;
    const int row = i / 4;
    const Rect r{2 + col * 45, 40 + row * 30, 42 + col * 45, 65 + row * 30};
    preview.widgets.push_back(make_widget(
        i, r, i == 1 ? "Subscribe" : "Episode " + std::to_string(i),
        i == 1 ? "subscribe_button" : "episode_tile_" + std::to_string(i),
        {Interaction::kClick, Interaction::kLongClick}));
  }
  preview.widgets.push_back(make_widget(
      32, Rect{0, 290, 179, 315}, "", "preview_toolbar",
      {Interaction::kClick, Interaction::kLongClick, Interaction::kScroll, Interaction::kSwipe,
       Interaction::kTextInput, Interaction::kBack}));
  preview.escape_actions = {{1, Interaction::kClick}, {32, Interaction::kBack}};

  // Episode detail: 37 tiles plus a toolbar, 80 actions. Back is the only way
  // out and crashes while multi-select is still armed.
  ScreenDef detail;
  detail.id = "episode_detail";
  detail.visual_group = 3;
  detail.render_salt = 303;
  detail.tarpit_ground_truth = true;
  for (int i = 0; i < 37; ++i) {
    const int col = i % 4;
    const int row = i / 4;
    const Rect r{2 + col * 45, 40 + row * 25, 42 + col * 45, 60 + row * 25};
    detail.widgets.push_back(make_widget(i, r, "Chapter " + std::to_string(i),
                                         "chapter_" + std::to_string(i),
                                         {Interaction::kClick, Interaction::kLongClick}));
  }
  detail.widgets.push_back(make_widget(
      37, Rect{0, 292, 179, 316}, "", "detail_toolbar",
      {Interaction::kClick, Interaction::kLongClick, Interaction::kScroll, Interaction::kSwipe,
       Interaction::kTextInput, Interaction::kBack}));
  detail.escape_actions = {{37, Interaction::kBack}};

  // Show notes: the harmless detail variant reached when multi-select has
  // lapsed. A home shortcut and back both leave.
  ScreenDef notes;
  notes.id = "show_notes";
  notes.visual_group = 4;
  notes.render_salt = 404;
  notes.tarpit_ground_truth = true;
  for (int i = 0; i < 12; ++i) {
    const int col = i % 3;
    const int row = i / 3;
    const Rect r{4 + col * 58, 44 + row * 36, 54 + col * 58, 74 + row * 36};
    notes.widgets.push_back(make_widget(i, r, i == 0 ? "Home" : "Note " + std::to_string(i),
                                        "note_" + std::to_string(i),
                                        {Interaction::kClick, Interaction::kLongClick}));
  }
  notes.widgets.push_back(make_widget(
      12, Rect{0, 288, 179, 314}, "", "notes_toolbar",
      {Interaction::kClick, Interaction::kLongClick, Interaction::kScroll, Interaction::kSwipe,
       Interaction::kTextInput, Interaction::kBack}));
  notes.escape_actions = {{12, Interaction::kBack}};

  app.screens = {std::move(library), std::move(preview), std::move(detail), std::move(notes)};

  Effect open_preview = Effect::goto_screen("preview");
  open_preview.sets = {{"multi_select", 18}};
  app.transitions.push_back({"library", 3, Interaction::kClick, std::move(open_preview)});

  app.transitions.push_back(
      {"preview", 1, Interaction::kClick,
       Effect::guarded("multi_select", Effect::goto_screen("episode_detail"),
                       Effect::goto_screen("show_notes"))});
  Effect preview_back = Effect::back_pop();
  preview_back.clears = {"multi_select"};
  app.transitions.push_back({"preview", 32, Interaction::kBack, std::move(preview_back)});

  app.transitions.push_back(
      {"episode_detail", 37, Interaction::kBack,
       Effect::guarded(
           "multi_select",
           Effect::crash("java.lang.NullPointerException: SubscriptionCart.commit "
                         "(EpisodeDetailFragment.java:7609)"),
           Effect::back_pop())});

  app.transitions.push_back({"show_notes", 12, Interaction::kBack, Effect::back_pop()});
  app.transitions.push_back({"show_notes", 0, Interaction::kClick, Effect::goto_screen("library")});

  validate_model(app);
  return app;
}

AppModel generate_benchmark(const BenchmarkParams& params) {
  if (params.n_screens < 2 || params.n_screens > 64) {
    throw ScenarioError("benchmark n_screens must be in [2, 64]");
  }
  if (params.tarpit_factor < 0.0 || params.tarpit_factor >= 1.0) {
    throw ScenarioError("benchmark tarpit_factor must be in [0, 1)");
  }
  const int n = params.n_screens;
  const double hub_rate = 1.0 - params.tarpit_factor;
  Rng rng(params.seed);

  AppModel app;
  app.name = "bench_n" + std::to_string(n) + "_f" +
             std::to_string(static_cast<int>(std::lround(params.tarpit_factor * 100))) + "_s" +
             std::to_string(params.seed);
  app.initial_screen = "s0";

  // Hub screens are spread evenly along the chain; everything else is a dense
  // trap screen whose only exits are the declared advance action and back.
  auto is_hub = [&](int i) {
    return static_cast<int>((i + 1) * hub_rate) > static_cast<int>(i * hub_rate);
  };

  for (int i = 0; i < n; ++i) {
    ScreenDef s;
    s.id = "s" + std::to_string(i);
    s.visual_group = i + 1;
    s.render_salt = static_cast<std::uint32_t>(rng.next_u64());
    const std::string next = "s" + std::to_string((i + 1) % n);

    if (is_hub(i)) {
      const int w = 5 + static_cast<int>(rng.uniform_index(3));
      for (int k = 0; k < w; ++k) {
        const int col = k % 4;
        const int row = k / 4;
        const Rect r{2 + col * 45, 40 + row * 30, 42 + col * 45, 64 + row * 30};
        s.widgets.push_back(make_widget(k, r, "Nav " + std::to_string(k),
                                        s.id + "_w" + std::to_string(k),
                                        {Interaction::kClick}));
      }
      const int advance = static_cast<int>(rng.uniform_index(w));
      app.transitions.push_back({s.id, advance, Interaction::kClick, Effect::goto_screen(next)});
      s.escape_actions = {{advance, Interaction::kClick}};
      // Side exits make hubs bounce walkers around the chain: up to two
      // backward links plus one forward skip, each on its own widget. The
      // backward links force earlier trap screens to be revisited, which is
      // where remembered escapes earn their keep.
      std::vector<int> others;
      for (int k = 0; k < w; ++k) {
        if (k != advance) others.push_back(k);
      }
      int exits = 2;  // advance + the synthetic back
      for (int b = 0; b < 2 && i > 0 && !others.empty(); ++b) {
        const int span = std::min(i, 6);
        const int back_target = i - 1 - static_cast<int>(rng.uniform_index(span));
        const int pick = others[rng.uniform_index(others.size())];
        others.erase(std::remove(others.begin(), others.end(), pick), others.end());
        app.transitions.push_back({s.id, pick, Interaction::kClick,
                                   Effect::goto_screen("s" + std::to_string(back_target))});
        ++exits;
      }
      if (!others.empty() && i + 2 < n) {
        const int pick = others[rng.uniform_index(others.size())];
        app.transitions.push_back(
            {s.id, pick, Interaction::kClick, Effect::goto_screen("s" + std::to_string(i + 2))});
        ++exits;
      }
      s.tarpit_ground_truth = static_cast<double>(w + 1 - exits) / (w + 1) >= 0.8;
    } else {
      const int w = 29 + static_cast<int>(rng.uniform_index(4));
      for (int k = 0; k < w; ++k) {
        const int col = k % 4;
        const int row = k / 4;
        const Rect r{2 + col * 45, 40 + row * 30, 42 + col * 45, 64 + row * 30};
        s.widgets.push_back(make_widget(k, r, "Row " + std::to_string(k),
                                        s.id + "_w" + std::to_string(k),
                                        {Interaction::kClick, Interaction::kLongClick}));
      }
      const int advance = static_cast<int>(rng.uniform_index(w));
      app.transitions.push_back({s.id, advance, Interaction::kClick, Effect::goto_screen(next)});
      s.escape_actions = {{advance, Interaction::kClick}};
      if (4 * i >= 3 * n && rng.chance(0.15)) {
        int victim = static_cast<int>(rng.uniform_index(w - 1));
        if (victim >= advance) ++victim;
        app.transitions.push_back({s.id, victim, Interaction::kLongClick,
                                   Effect::crash("ArrayIndexOutOfBounds in " + s.id +
                                                 " adapter")});
      }
      s.tarpit_ground_truth = true;  // (2w + 1 - 3) / (2w + 1) >= 0.8 for w >= 29
    }
    app.screens.push_back(std::move(s));
  }

  validate_model(app);
  return app;
}

}  // namespace tarpit
