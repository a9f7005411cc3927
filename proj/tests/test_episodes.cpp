#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sscr/episodes.hpp"

using namespace sscr;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("episode generation is deterministic in the seed") {
  const auto a = generate_episodes(20, 5, 1234);
  const auto b = generate_episodes(20, 5, 1234);
  REQUIRE(a.size() == 20);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    REQUIRE(a[i].turns.size() == 5);
    for (size_t t = 0; t < 5; ++t) {
      CHECK(a[i].turns[t].text == b[i].turns[t].text);
      CHECK(a[i].turns[t].scene == b[i].turns[t].scene);
    }
  }
  const auto c = generate_episodes(20, 5, 999);
  bool any_different = false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].turns[0].text != c[i].turns[0].text) any_different = true;
  }
  CHECK(any_different);
}

TEST_CASE("episodes replay cleanly from an empty canvas") {
  for (const Episode& ep : generate_episodes(50, 5, 77)) {
    Scene replay;
    for (size_t t = 0; t < ep.turns.size(); ++t) {
      const Turn& turn = ep.turns[t];
      CHECK(parse(turn.text) == turn.edit);
      CHECK(edit_feasible(replay, turn.edit));
      replay = apply_edit(replay, turn.edit);
      CHECK(replay == turn.scene);
      CHECK(turn.scene.placements.size() == t + 1);
    }
  }
}

TEST_CASE("first turn always targets the center") {
  for (const Episode& ep : generate_episodes(100, 5, 42)) {
    CHECK(ep.turns[0].edit.relation == Relation::AtCenter);
  }
}

TEST_CASE("later turns use a mix of relations") {
  int directional = 0, centered = 0;
  for (const Episode& ep : generate_episodes(100, 5, 43)) {
    for (size_t t = 1; t < ep.turns.size(); ++t) {
      (ep.turns[t].edit.relation == Relation::AtCenter ? centered : directional)++;
    }
  }
  CHECK(directional > 300);  // directional edits dominate once anchors exist
}

TEST_CASE("contiguous splits cover disjoint episodes") {
  const auto all = generate_episodes(100, 3, 5);
  const DatasetSplits s = make_splits(all, 60, 20, 20);
  CHECK(s.train.size() == 60);
  CHECK(s.val.size() == 20);
  CHECK(s.test.size() == 20);
  CHECK(s.train.front().id == all.front().id);
  CHECK(s.test.back().id == all.back().id);
  CHECK_THROWS_AS(make_splits(all, 80, 20, 20), std::invalid_argument);
}

TEST_CASE("subsampling is deterministic, order preserving, and sized right") {
  const auto all = generate_episodes(100, 3, 6);
  const auto half = subsample_episodes(all, 0.5, 11);
  const auto half_again = subsample_episodes(all, 0.5, 11);
  CHECK(half.size() == 50);
  REQUIRE(half.size() == half_again.size());
  for (size_t i = 0; i < half.size(); ++i) CHECK(half[i].id == half_again[i].id);
  for (size_t i = 1; i < half.size(); ++i) CHECK(half[i - 1].id < half[i].id);

  const auto different_seed = subsample_episodes(all, 0.5, 12);
  bool differs = false;
  for (size_t i = 0; i < half.size(); ++i) differs = differs || half[i].id != different_seed[i].id;
  CHECK(differs);

  CHECK(subsample_episodes(all, 0.1, 1).size() == 10);
  CHECK(subsample_episodes(all, 1.0, 1).size() == 100);
  CHECK(subsample_episodes(all, 0.0, 1).size() == 1);  // floor of one episode
  CHECK_THROWS_AS(subsample_episodes(all, 1.5, 1), std::invalid_argument);
}

TEST_CASE("jsonl round trips exactly") {
  const std::string path = temp_path("sscr_episodes_test.jsonl");
  const auto episodes = generate_episodes(25, 5, 91);
  save_episodes(episodes, path);

  const auto loaded = load_episodes(path);
  REQUIRE(loaded.size() == episodes.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == episodes[i].id);
    REQUIRE(loaded[i].turns.size() == episodes[i].turns.size());
    for (size_t t = 0; t < loaded[i].turns.size(); ++t) {
      CHECK(loaded[i].turns[t].text == episodes[i].turns[t].text);
      CHECK(loaded[i].turns[t].edit == episodes[i].turns[t].edit);
      CHECK(loaded[i].turns[t].scene == episodes[i].turns[t].scene);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("the jsonl header is checked on load") {
  const std::string path = temp_path("sscr_episodes_header.jsonl");
  {
    std::ofstream out(path);
    out << R"({"format":"something-else","version":1,"grid":8})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_episodes(path), doctest::Contains("header"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("tampered scenes are rejected on load") {
  const std::string path = temp_path("sscr_episodes_tampered.jsonl");
  const auto episodes = generate_episodes(3, 3, 17);
  save_episodes(episodes, path);

  // Move one stored object somewhere else.
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const std::string needle = "\"scene\":[[";
  const auto at = content.find(needle);
  REQUIRE(at != std::string::npos);
  // First placement is the centered first turn at (4,4); retarget its x.
  const auto x_at = content.find(",4,4]", at);
  REQUIRE(x_at != std::string::npos);
  content.replace(x_at, 5, ",5,4]");
  std::ofstream out(path);
  out << content;
  out.close();

  CHECK_THROWS_WITH_AS(load_episodes(path), doctest::Contains("replay"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("zero-shot splits keep held-out combinations out of train") {
  const DatasetSplits s = generate_zero_shot_data(40, 10, 15, 5, 314);
  CHECK(s.train.size() == 40);
  CHECK(s.val.size() == 10);
  CHECK(s.test.size() == 15);
  for (const Episode& ep : s.train) CHECK_FALSE(mentions_holdout(ep));
  for (const Episode& ep : s.val) CHECK_FALSE(mentions_holdout(ep));
  for (const Episode& ep : s.test) CHECK(mentions_holdout(ep));
}

TEST_CASE("the holdout list is the documented four pairs") {
  const auto& h = zero_shot_holdout();
  REQUIRE(h.size() == 4);
  CHECK(h[0] == ObjectSpec{Color::Gray, Shape3::Cube});
  CHECK(h[1] == ObjectSpec{Color::Red, Shape3::Cube});
  CHECK(h[2] == ObjectSpec{Color::Green, Shape3::Sphere});
  CHECK(h[3] == ObjectSpec{Color::Purple, Shape3::Cylinder});
}
