#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "tarpit/memory.hpp"
#include "tarpit/rng.hpp"

using namespace tarpit;

namespace {

UiState grid_state(const int value[8][9]) {
  auto img = std::make_shared<Bitmap>(18, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 18; ++x) {
      img->at(x, y) = static_cast<std::uint8_t>(value[y / 2][x / 2]);
    }
  }
  UiState s;
  s.screenshot = std::move(img);
  s.widgets = std::make_shared<std::vector<Widget>>();
  s.true_screen_id = "mem";
  return s;
}

// Checker layout with 60-tone contrasts; cell (0,0) is adjustable so tests can
// stay inside or break out of the comparison margins.
UiState checker_state(int corner_tone) {
  int v[8][9];
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 9; ++j) v[i][j] = 30 + ((i + j) % 2) * 60;
  }
  v[0][0] = corner_tone;
  return grid_state(v);
}

UiEvent click_event(int id, Rect r) {
  UiEvent ev;
  ev.action_id = id;
  ev.type = Interaction::kClick;
  ev.bounds = r;
  return ev;
}

}  // namespace

TEST_CASE("empty memory never matches") {
  TarpitMemory mem(MemoryConfig{});
  CHECK(mem.lookup(checker_state(30)) == nullptr);
  CHECK(mem.size() == 0);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(TarpitMemory(MemoryConfig{0.0, 0.8}), std::invalid_argument);
  CHECK_THROWS_AS(TarpitMemory(MemoryConfig{1.2, 0.8}), std::invalid_argument);
  CHECK_THROWS_AS(TarpitMemory(MemoryConfig{0.99, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(TarpitMemory(MemoryConfig{0.99, 1.1}), std::invalid_argument);
}

TEST_CASE("exact re-encounter matches and holds the recorded escape") {
  TarpitMemory mem(MemoryConfig{});
  const UiEvent ev = click_event(3, {10, 40, 30, 60});
  mem.record_escape(checker_state(30), ev);
  REQUIRE(mem.size() == 1);

  const TarpitRecord* rec = mem.lookup(checker_state(30));
  REQUIRE(rec != nullptr);
  CHECK(rec->tarpit_id == 0);
  REQUIRE(rec->actions.size() == 1);
  CHECK(rec->actions[0] == ev);
}

TEST_CASE("a small retone that flips no hash bit still matches at 0.99") {
  // Clock-digit style variation: one downsample cell moves 30 -> 38, well
  // inside the 60-tone margins, so all 64 comparisons keep their signs.
  REQUIRE(hamming(dhash(checker_state(30).image()), dhash(checker_state(38).image())) == 0);

  TarpitMemory mem(MemoryConfig{});
  mem.record_escape(checker_state(30), click_event(1, {0, 40, 10, 50}));
  CHECK(mem.lookup(checker_state(38)) != nullptr);
}

TEST_CASE("one flipped bit is below 0.99 and never matches") {
  // 30 -> 200 breaks the (0,0) vs (0,1) comparison: similarity 63/64.
  REQUIRE(hamming(dhash(checker_state(30).image()), dhash(checker_state(200).image())) == 1);

  TarpitMemory mem(MemoryConfig{});
  mem.record_escape(checker_state(30), click_event(1, {0, 40, 10, 50}));
  CHECK(mem.lookup(checker_state(200)) == nullptr);
  CHECK(mem.size() == 1);
}

TEST_CASE("distinct escapes accumulate, duplicates are dropped") {
  TarpitMemory mem(MemoryConfig{});
  const UiEvent a = click_event(3, {10, 40, 30, 60});
  UiEvent b = a;
  b.bounds = {50, 40, 70, 60};
  UiEvent c = a;
  c.type = Interaction::kTextInput;
  c.payload = "test";

  mem.record_escape(checker_state(30), a);
  mem.record_escape(checker_state(30), b);
  mem.record_escape(checker_state(30), a);  // duplicate
  mem.record_escape(checker_state(30), c);
  REQUIRE(mem.size() == 1);
  CHECK(mem.records()[0].actions.size() == 3);
}

TEST_CASE("dissimilar tarpits get separate records") {
  TarpitMemory mem(MemoryConfig{});
  int other[8][9];
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 9; ++j) other[i][j] = 20 + 20 * j;
  }
  mem.record_escape(checker_state(30), click_event(1, {0, 40, 10, 50}));
  mem.record_escape(grid_state(other), click_event(2, {0, 60, 10, 70}));
  REQUIRE(mem.size() == 2);
  CHECK(mem.records()[0].tarpit_id == 0);
  CHECK(mem.records()[1].tarpit_id == 1);
  const TarpitRecord* rec = mem.lookup(grid_state(other));
  REQUIRE(rec != nullptr);
  CHECK(rec->tarpit_id == 1);
}

TEST_CASE("lookup prefers the lowest tarpit id when several match") {
  // Two records with the same representative hash can only come from an
  // imported file; lookup must still resolve to the lowest id.
  const std::string path = "test_memory_dup.json";
  {
    std::ofstream out(path);
    const std::string hex = dhash(checker_state(30).image()).to_hex();
    out << R"([{"tarpit_id":0,"screenshot_hash":")" << hex
        << R"(","actions":[{"type":"click","bounds":[1,2,3,4]}]},)"
        << R"({"tarpit_id":1,"screenshot_hash":")" << hex
        << R"(","actions":[{"type":"back","bounds":[0,0,179,319]}]}])";
  }
  TarpitMemory mem = TarpitMemory::load(path, MemoryConfig{});
  REQUIRE(mem.size() == 2);
  const TarpitRecord* rec = mem.lookup(checker_state(30));
  REQUIRE(rec != nullptr);
  CHECK(rec->tarpit_id == 0);
  std::remove(path.c_str());
}

TEST_CASE("dispatch splits on the reuse threshold inclusively") {
  TarpitMemory mem(MemoryConfig{0.99, 0.8});
  Rng rng(1);

  auto d = mem.dispatch(checker_state(30), 0.1, rng);
  CHECK(d.kind == TarpitMemory::Dispatch::Kind::kDelegate);
  CHECK(d.tarpit_id == -1);

  mem.record_escape(checker_state(30), click_event(3, {10, 40, 30, 60}));
  d = mem.dispatch(checker_state(30), 0.8, rng);  // boundary: zeta == p_reuse
  CHECK(d.kind == TarpitMemory::Dispatch::Kind::kReuse);
  REQUIRE(d.event.has_value());
  CHECK(d.tarpit_id == 0);

  d = mem.dispatch(checker_state(30), 0.8000001, rng);
  CHECK(d.kind == TarpitMemory::Dispatch::Kind::kDelegate);
  CHECK(d.tarpit_id == 0);
}

TEST_CASE("reuse rate and action sampling follow the configured distribution") {
  TarpitMemory mem(MemoryConfig{0.99, 0.8});
  for (int i = 0; i < 4; ++i) {
    mem.record_escape(checker_state(30), click_event(i, {i * 10, 40, i * 10 + 5, 50}));
  }
  Rng rng(0xd15);
  const int kDraws = 10000;
  int reused = 0;
  int per_action[4] = {};
  for (int i = 0; i < kDraws; ++i) {
    auto d = mem.dispatch(checker_state(30), rng.uniform_real(), rng);
    if (d.kind == TarpitMemory::Dispatch::Kind::kReuse) {
      ++reused;
      ++per_action[d.event->bounds.left / 10];
    }
  }
  const double reuse_rate = static_cast<double>(reused) / kDraws;
  CHECK(reuse_rate == doctest::Approx(0.8).epsilon(0.0375));  // +/- 0.03 absolute
  for (int i = 0; i < 4; ++i) {
    const double share = static_cast<double>(per_action[i]) / reused;
    CHECK(share == doctest::Approx(0.25).epsilon(0.12));  // +/- 3 percentage points
  }
}

TEST_CASE("export format and round trip") {
  TarpitMemory mem(MemoryConfig{});
  UiEvent ev = click_event(3, {10, 40, 30, 60});
  mem.record_escape(checker_state(30), ev);
  UiEvent text = ev;
  text.type = Interaction::kTextInput;
  text.payload = "a@b.c";
  mem.record_escape(checker_state(30), text);

  const auto doc = nlohmann::json::parse(mem.export_json());
  REQUIRE(doc.is_array());
  REQUIRE(doc.size() == 1);
  CHECK(doc[0]["tarpit_id"] == 0);
  CHECK(doc[0]["screenshot_hash"] == dhash(checker_state(30).image()).to_hex());
  REQUIRE(doc[0]["actions"].size() == 2);
  CHECK(doc[0]["actions"][0]["type"] == "click");
  CHECK(doc[0]["actions"][0]["bounds"] == nlohmann::json({10, 40, 30, 60}));
  CHECK_FALSE(doc[0]["actions"][0].contains("payload"));
  CHECK(doc[0]["actions"][1]["payload"] == "a@b.c");

  const std::string path = "test_memory_roundtrip.json";
  mem.save(path);
  TarpitMemory back = TarpitMemory::load(path, MemoryConfig{});
  REQUIRE(back.size() == 1);
  CHECK(back.records()[0].actions.size() == 2);
  CHECK(back.records()[0].actions[0].type == ev.type);
  CHECK(back.records()[0].actions[0].bounds == ev.bounds);
  CHECK(back.records()[0].actions[1].payload == text.payload);
  CHECK(back.lookup(checker_state(30)) != nullptr);
  std::remove(path.c_str());
}
