#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <set>

#include "doctest.h"
#include "sscr/grammar.hpp"

using namespace sscr;

TEST_CASE("vocabulary layout is frozen") {
  const Vocabulary& v = Vocabulary::instance();
  CHECK(v.size() == kVocabSize);
  CHECK(kVocabSize == 22);
  CHECK(v.text(kPadId) == "<pad>");
  CHECK(v.text(kBosId) == "<bos>");
  CHECK(v.text(kEosId) == "<eos>");
  CHECK(v.type(v.color_token(Color::Red)) == TokenType::Color);
  CHECK(v.text(v.color_token(Color::Red)) == "red");
  CHECK(v.text(v.shape_token(Shape3::Cylinder)) == "cylinder");
  CHECK(v.text(v.relation_token(Relation::AtCenter)) == "at the center");
  CHECK(v.text(v.relation_token(Relation::LeftOf)) == "to the left of");
  CHECK(v.token_color(v.color_token(Color::Cyan)) == Color::Cyan);
  CHECK(v.token_shape(v.shape_token(Shape3::Sphere)) == Shape3::Sphere);
  CHECK(v.token_relation(v.relation_token(Relation::Behind)) == Relation::Behind);
}

TEST_CASE("the checked-in lexicon matches the embedded vocabulary") {
  std::ifstream in(std::string(SSCR_SOURCE_DIR) + "/data/lexicon.txt");
  REQUIRE(in.good());

  const char* type_names[] = {"special", "filler", "color", "shape", "relation"};
  const Vocabulary& v = Vocabulary::instance();
  std::string line;
  int id = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    REQUIRE(id < v.size());
    CHECK(line.substr(0, tab) == v.text(id));
    CHECK(line.substr(tab + 1) == type_names[static_cast<int>(v.type(id))]);
    ++id;
  }
  CHECK(id == v.size());
}

TEST_CASE("tokenize folds multi-word relations greedily") {
  const Vocabulary& v = Vocabulary::instance();
  const auto ids = tokenize("add a red cube to the left of the blue sphere");
  REQUIRE(ids.size() == 8);
  CHECK(v.text(ids[0]) == "add");
  CHECK(v.text(ids[1]) == "a");
  CHECK(v.text(ids[2]) == "red");
  CHECK(v.text(ids[3]) == "cube");
  CHECK(v.text(ids[4]) == "to the left of");
  CHECK(v.text(ids[5]) == "the");
  CHECK(v.text(ids[6]) == "blue");
  CHECK(v.text(ids[7]) == "sphere");

  const auto center = tokenize("add a gray cube at the center");
  REQUIRE(center.size() == 5);
  CHECK(v.text(center[4]) == "at the center");
}

TEST_CASE("parse handles both location forms") {
  ParsedEdit centered = parse("add a gray cube at the center");
  CHECK(centered.target == ObjectSpec{Color::Gray, Shape3::Cube});
  CHECK(centered.relation == Relation::AtCenter);
  CHECK_FALSE(centered.anchor.has_value());

  ParsedEdit relative = parse("add a red cube behind the blue sphere");
  CHECK(relative.target == ObjectSpec{Color::Red, Shape3::Cube});
  CHECK(relative.relation == Relation::Behind);
  REQUIRE(relative.anchor.has_value());
  CHECK(*relative.anchor == ObjectSpec{Color::Blue, Shape3::Sphere});
}

TEST_CASE("parse errors report 0-based token positions") {
  auto position_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.position();
    }
    return -1;
  };

  CHECK(position_of("add a red red cube at the center") == 3);
  CHECK(position_of("a red cube at the center") == 0);        // missing "add"
  CHECK(position_of("add red cube at the center") == 1);      // missing "a"
  CHECK(position_of("add a cube red at the center") == 2);    // shape where color expected
  CHECK(position_of("add a red cube") == 4);                  // missing location
  CHECK(position_of("add a red cube behind blue sphere") == 5);  // missing "the"
  CHECK(position_of("add a red cube behind the blue") == 7);  // anchor shape missing
  CHECK(position_of("add a red cube at the center behind") == 5);  // trailing token
  CHECK(position_of("add a crimson cube at the center") == 2);     // unknown word
}

TEST_CASE("parse error messages name the offending token") {
  CHECK_THROWS_WITH_AS(parse("add a red red cube at the center"),
                       doctest::Contains("token 3"), ParseError);
  CHECK_THROWS_WITH_AS(parse("add a crimson cube at the center"),
                       doctest::Contains("crimson"), ParseError);
}

TEST_CASE("synthesize and parse are inverse over the whole edit space") {
  const auto all = enumerate_all_edits();
  CHECK(all.size() == 24u * (1u + 4u * 24u));  // 2328 grammatical edits

  std::set<std::string> texts;
  for (const ParsedEdit& e : all) {
    const std::string text = synthesize(e);
    texts.insert(text);
    ParsedEdit back = parse(text);
    CHECK(back.target == e.target);
    CHECK(back.relation == e.relation);
    CHECK(back.anchor.has_value() == e.anchor.has_value());
    if (e.anchor.has_value()) CHECK(*back.anchor == *e.anchor);
  }
  CHECK(texts.size() == all.size());  // surface forms are unique
}

TEST_CASE("interventions always change something and always parse") {
  Rng rng(31);
  const auto all = enumerate_all_edits();
  int relation_changes = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const ParsedEdit& base = all[static_cast<size_t>(rng.uniform_int(static_cast<int>(all.size())))];
    const ParsedEdit cf = intervene(base, rng);

    // Type-preserving: relation class must not cross the center/directional line.
    CHECK((cf.relation == Relation::AtCenter) == (base.relation == Relation::AtCenter));
    CHECK(cf.anchor.has_value() == base.anchor.has_value());

    // At least one slot differs.
    const bool differs = !(cf.target == base.target) || cf.relation != base.relation ||
                         (base.anchor.has_value() && !(*cf.anchor == *base.anchor));
    CHECK(differs);
    if (cf.relation != base.relation) ++relation_changes;

    // Round trip through the surface form.
    ParsedEdit reparsed = parse(synthesize(cf));
    CHECK(reparsed.target == cf.target);
    CHECK(reparsed.relation == cf.relation);
  }
  CHECK(relation_changes > 1000);  // directional slots do get resampled
}

TEST_CASE("interventions on centered edits leave the relation alone") {
  Rng rng(32);
  ParsedEdit base;
  base.target = {Color::Red, Shape3::Cube};
  base.relation = Relation::AtCenter;
  for (int i = 0; i < 200; ++i) {
    ParsedEdit cf = intervene(base, rng);
    CHECK(cf.relation == Relation::AtCenter);
    CHECK_FALSE(cf.anchor.has_value());
    CHECK_FALSE(cf.target == base.target);
  }
}

TEST_CASE("encode pads to fixed length and decode drops specials") {
  const std::string text = "add a red cube behind the blue sphere";
  const auto ids = encode_instruction(text);
  REQUIRE(static_cast<int>(ids.size()) == kMaxInstructionLen);
  CHECK(ids[0] == kBosId);
  CHECK(ids[9] == kEosId);
  CHECK(ids[10] == kPadId);
  CHECK(ids[11] == kPadId);
  CHECK(decode_tokens(ids) == text);

  const auto short_ids = encode_instruction("add a gray cube at the center");
  CHECK(decode_tokens(short_ids) == "add a gray cube at the center");
  CHECK_THROWS_AS(encode_instruction(text, 5), std::invalid_argument);
}

TEST_CASE("sample_feasible_edit only proposes applicable edits") {
  Rng rng(33);
  Scene s;
  for (int turn = 0; turn < 5; ++turn) {
    ParsedEdit e = sample_feasible_edit(s, rng);
    CHECK(edit_feasible(s, e));
    s = apply_edit(s, e);
  }
  CHECK(s.placements.size() == 5);
}

TEST_CASE("only centered edits are feasible on an empty canvas") {
  Rng rng(34);
  Scene empty;
  for (int i = 0; i < 50; ++i) {
    ParsedEdit e = sample_feasible_edit(empty, rng);
    CHECK(e.relation == Relation::AtCenter);
  }
}
