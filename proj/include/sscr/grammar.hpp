#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sscr/rng.hpp"
#include "sscr/scene.hpp"

namespace sscr {

enum class TokenType { Special, Filler, Color, Shape, Relation };

struct TokenInfo {
  int id = 0;
  std::string text;  // surface form; may contain spaces
  TokenType type = TokenType::Special;
};

constexpr int kPadId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
constexpr int kVocabSize = 22;
// Longest instruction is 8 grammar tokens; 12 leaves room for BOS/EOS + slack.
constexpr int kMaxInstructionLen = 12;

class Vocabulary {
 public:
  static const Vocabulary& instance();

  int size() const { return static_cast<int>(tokens_.size()); }
  const TokenInfo& info(int id) const;
  const std::string& text(int id) const { return info(id).text; }
  TokenType type(int id) const { return info(id).type; }
  std::optional<int> lookup(const std::string& surface) const;

  int color_token(Color c) const;
  int shape_token(Shape3 s) const;
  int relation_token(Relation r) const;
  Color token_color(int id) const;
  Shape3 token_shape(int id) const;
  Relation token_relation(int id) const;

  const std::vector<TokenInfo>& tokens() const { return tokens_; }

 private:
  Vocabulary();
  std::vector<TokenInfo> tokens_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int position, const std::string& message)
      : std::runtime_error("parse error at token " + std::to_string(position) + ": " + message),
        position_(position) {}
  int position() const { return position_; }

 private:
  int position_ = 0;
};

// Splits on whitespace and greedily folds multi-word surface forms
// ("to the left of") into single tokens. Throws ParseError on unknown words.
std::vector<int> tokenize(const std::string& text);

// instruction := "add" "a" <color> <shape> <location>
// location    := "at the center" | <relation> "the" <color> <shape>
ParsedEdit parse(const std::string& text);

// Canonical surface form; parse(synthesize(e)) reproduces e exactly.
std::string synthesize(const ParsedEdit& edit);

// Every grammatical edit: 24 centered + 24 * 4 * 24 relative.
std::vector<ParsedEdit> enumerate_all_edits();

// Draws a random edit that is feasible in `scene` (throws if none exists).
ParsedEdit sample_feasible_edit(const Scene& scene, Rng& rng);

// Type-preserving counterfactual intervention: each replaceable slot (colors,
// shapes, and directional relations) is resampled with probability 1/2; if no
// slot changes, one is forced. "at the center" is never touched so the result
// always parses. Returns an edit differing from the input in >= 1 slot.
ParsedEdit intervene(const ParsedEdit& edit, Rng& rng);

// BOS + tokens + EOS, padded with PAD to `len`.
std::vector<int> encode_instruction(const std::string& text, int len = kMaxInstructionLen);

// Drops BOS/PAD, stops at EOS, joins surface forms with single spaces.
std::string decode_tokens(const std::vector<int>& ids);

}  // namespace sscr
