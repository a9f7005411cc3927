#include "sscr/grammar.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace sscr {
namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

}  // namespace

Vocabulary::Vocabulary() {
  auto add = [&](const std::string& text, TokenType type) {
    tokens_.push_back({static_cast<int>(tokens_.size()), text, type});
  };
  add("<pad>", TokenType::Special);
  add("<bos>", TokenType::Special);
  add("<eos>", TokenType::Special);
  add("add", TokenType::Filler);
  add("a", TokenType::Filler);
  add("the", TokenType::Filler);
  for (int c = 0; c < kNumColors; ++c) add(color_names()[static_cast<size_t>(c)], TokenType::Color);
  for (int s = 0; s < kNumShapes; ++s) add(shape_names()[static_cast<size_t>(s)], TokenType::Shape);
  add("at the center", TokenType::Relation);
  add("behind", TokenType::Relation);
  add("in front of", TokenType::Relation);
  add("to the left of", TokenType::Relation);
  add("to the right of", TokenType::Relation);
}

const Vocabulary& Vocabulary::instance() {
  static const Vocabulary v;
  return v;
}

const TokenInfo& Vocabulary::info(int id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("vocabulary: token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<size_t>(id)];
}

std::optional<int> Vocabulary::lookup(const std::string& surface) const {
  for (const auto& t : tokens_) {
    if (t.text == surface) return t.id;
  }
  return std::nullopt;
}

int Vocabulary::color_token(Color c) const { return 6 + static_cast<int>(c); }
int Vocabulary::shape_token(Shape3 s) const { return 6 + kNumColors + static_cast<int>(s); }

int Vocabulary::relation_token(Relation r) const {
  return 6 + kNumColors + kNumShapes + static_cast<int>(r);
}

Color Vocabulary::token_color(int id) const {
  if (type(id) != TokenType::Color) throw std::invalid_argument("not a color token");
  return static_cast<Color>(id - 6);
}

Shape3 Vocabulary::token_shape(int id) const {
  if (type(id) != TokenType::Shape) throw std::invalid_argument("not a shape token");
  return static_cast<Shape3>(id - 6 - kNumColors);
}

Relation Vocabulary::token_relation(int id) const {
  if (type(id) != TokenType::Relation) throw std::invalid_argument("not a relation token");
  return static_cast<Relation>(id - 6 - kNumColors - kNumShapes);
}

std::vector<int> tokenize(const std::string& text) {
  // Longest-match table over word spans (multi-word forms span up to 4 words).
  static const std::map<std::string, int> surface_to_id = [] {
    std::map<std::string, int> m;
    const auto& toks = Vocabulary::instance().tokens();
    for (const auto& t : toks) {
      if (t.type != TokenType::Special) m[t.text] = t.id;
    }
    return m;
  }();

  const std::vector<std::string> words = split_words(text);
  std::vector<int> ids;
  size_t i = 0;
  while (i < words.size()) {
    int matched = -1;
    size_t matched_len = 0;
    for (size_t span = std::min<size_t>(4, words.size() - i); span >= 1; --span) {
      std::string joined = words[i];
      for (size_t k = 1; k < span; ++k) joined += " " + words[i + k];
      auto it = surface_to_id.find(joined);
      if (it != surface_to_id.end()) {
        matched = it->second;
        matched_len = span;
        break;
      }
    }
    if (matched < 0) {
      throw ParseError(static_cast<int>(ids.size()), "unknown word '" + words[i] + "'");
    }
    ids.push_back(matched);
    i += matched_len;
  }
  return ids;
}

ParsedEdit parse(const std::string& text) {
  const Vocabulary& vocab = Vocabulary::instance();
  const std::vector<int> ids = tokenize(text);

  size_t pos = 0;
  auto fail = [&](const std::string& expected) -> ParseError {
    if (pos >= ids.size()) {
      return ParseError(static_cast<int>(pos), "expected " + expected + ", got end of instruction");
    }
    return ParseError(static_cast<int>(pos),
                      "expected " + expected + ", got '" + vocab.text(ids[pos]) + "'");
  };
  auto expect_literal = [&](const std::string& lit) {
    if (pos >= ids.size() || vocab.text(ids[pos]) != lit) throw fail("'" + lit + "'");
    ++pos;
  };
  auto expect_color = [&]() {
    if (pos >= ids.size() || vocab.type(ids[pos]) != TokenType::Color) throw fail("a color");
    return vocab.token_color(ids[pos++]);
  };
  auto expect_shape = [&]() {
    if (pos >= ids.size() || vocab.type(ids[pos]) != TokenType::Shape) throw fail("a shape");
    return vocab.token_shape(ids[pos++]);
  };

  ParsedEdit edit;
  expect_literal("add");
  expect_literal("a");
  edit.target.color = expect_color();
  edit.target.shape = expect_shape();

  if (pos >= ids.size() || vocab.type(ids[pos]) != TokenType::Relation) throw fail("a relation");
  edit.relation = vocab.token_relation(ids[pos++]);

  if (edit.relation != Relation::AtCenter) {
    expect_literal("the");
    ObjectSpec anchor;
    anchor.color = expect_color();
    anchor.shape = expect_shape();
    edit.anchor = anchor;
  }
  if (pos != ids.size()) throw fail("end of instruction");
  return edit;
}

std::string synthesize(const ParsedEdit& edit) {
  const Vocabulary& vocab = Vocabulary::instance();
  std::string out = "add a " + edit.target.str();
  out += " " + vocab.text(vocab.relation_token(edit.relation));
  if (edit.relation != Relation::AtCenter) {
    if (!edit.anchor.has_value()) {
      throw std::invalid_argument("synthesize: relative relation without an anchor");
    }
    out += " the " + edit.anchor->str();
  }
  return out;
}

std::vector<ParsedEdit> enumerate_all_edits() {
  std::vector<ParsedEdit> out;
  out.reserve(kNumObjectSpecs * (1 + 4 * kNumObjectSpecs));
  for (int t = 0; t < kNumObjectSpecs; ++t) {
    ParsedEdit center;
    center.target = ObjectSpec::from_index(t);
    center.relation = Relation::AtCenter;
    out.push_back(center);
    for (Relation r : {Relation::Behind, Relation::InFrontOf, Relation::LeftOf, Relation::RightOf}) {
      for (int a = 0; a < kNumObjectSpecs; ++a) {
        ParsedEdit e;
        e.target = ObjectSpec::from_index(t);
        e.relation = r;
        e.anchor = ObjectSpec::from_index(a);
        out.push_back(e);
      }
    }
  }
  return out;
}

ParsedEdit sample_feasible_edit(const Scene& scene, Rng& rng) {
  std::vector<ParsedEdit> feasible;
  for (const ParsedEdit& e : enumerate_all_edits()) {
    if (edit_feasible(scene, e)) feasible.push_back(e);
  }
  if (feasible.empty()) throw EditError("sample_feasible_edit: no feasible edit");
  return rng.pick(feasible);
}

ParsedEdit intervene(const ParsedEdit& edit, Rng& rng) {
  // Slot indices: 0 target color, 1 target shape, 2 relation (directional
  // only), 3 anchor color, 4 anchor shape.
  std::vector<int> slots = {0, 1};
  if (edit.relation != Relation::AtCenter) {
    slots.push_back(2);
    slots.push_back(3);
    slots.push_back(4);
  }

  auto other_color = [&](Color c) {
    int v = rng.uniform_int(kNumColors - 1);
    if (v >= static_cast<int>(c)) ++v;
    return static_cast<Color>(v);
  };
  auto other_shape = [&](Shape3 s) {
    int v = rng.uniform_int(kNumShapes - 1);
    if (v >= static_cast<int>(s)) ++v;
    return static_cast<Shape3>(v);
  };
  auto other_relation = [&](Relation r) {
    // Directional relations occupy enum values 1..4.
    int v = rng.uniform_int(3) + 1;
    if (v >= static_cast<int>(r)) ++v;
    return static_cast<Relation>(v);
  };

  ParsedEdit out = edit;
  auto apply_slot = [&](int slot) {
    switch (slot) {
      case 0: out.target.color = other_color(out.target.color); break;
      case 1: out.target.shape = other_shape(out.target.shape); break;
      case 2: out.relation = other_relation(out.relation); break;
      case 3: out.anchor->color = other_color(out.anchor->color); break;
      case 4: out.anchor->shape = other_shape(out.anchor->shape); break;
      default: break;
    }
  };

  bool changed = false;
  for (int slot : slots) {
    if (rng.bernoulli(0.5)) {
      apply_slot(slot);
      changed = true;
    }
  }
  if (!changed) apply_slot(slots[static_cast<size_t>(rng.uniform_int(static_cast<int>(slots.size())))]);
  return out;
}

std::vector<int> encode_instruction(const std::string& text, int len) {
  std::vector<int> ids = tokenize(text);
  if (static_cast<int>(ids.size()) + 2 > len) {
    throw std::invalid_argument("encode_instruction: instruction longer than " +
                                std::to_string(len) + " slots");
  }
  std::vector<int> out;
  out.reserve(static_cast<size_t>(len));
  out.push_back(kBosId);
  out.insert(out.end(), ids.begin(), ids.end());
  out.push_back(kEosId);
  while (static_cast<int>(out.size()) < len) out.push_back(kPadId);
  return out;
}

std::string decode_tokens(const std::vector<int>& ids) {
  const Vocabulary& vocab = Vocabulary::instance();
  std::string out;
  for (int id : ids) {
    if (id == kEosId) break;
    if (id == kBosId || id == kPadId) continue;
    if (!out.empty()) out += " ";
    out += vocab.text(id);
  }
  return out;
}

}  // namespace sscr
