#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "subseg/error.hpp"

namespace subseg {

inline constexpr std::string_view kEolLit = "<eol>";
inline constexpr std::string_view kEobLit = "<eob>";

enum class BreakKind : uint8_t { Eol, Eob };

inline std::string_view break_literal(BreakKind k) {
  return k == BreakKind::Eol ? kEolLit : kEobLit;
}

// One token of a segmented sentence: either a word or a subtitle break.
struct Token {
  enum Kind : uint8_t { kWord, kEol, kEob };

  Kind kind = kWord;
  std::string text;  // empty for breaks

  static Token word(std::string w) { return Token{kWord, std::move(w)}; }
  static Token eol() { return Token{kEol, {}}; }
  static Token eob() { return Token{kEob, {}}; }
  static Token brk(BreakKind k) { return k == BreakKind::Eol ? eol() : eob(); }

  bool is_break() const { return kind != kWord; }
  bool is_eol() const { return kind == kEol; }
  bool is_eob() const { return kind == kEob; }

  // Serialized form: the word itself, or the break literal.
  std::string_view str() const {
    switch (kind) {
      case kEol: return kEolLit;
      case kEob: return kEobLit;
      default: return text;
    }
  }

  bool operator==(const Token& o) const { return kind == o.kind && text == o.text; }
};

// Token sequence with inline subtitle breaks. Always satisfies: no two
// adjacent breaks, first token is not a break. Strict sentences additionally
// end in <eob> and keep blocks to at most two lines.
struct SegmentedSentence {
  std::vector<Token> tokens;

  bool empty() const { return tokens.empty(); }
  size_t size() const { return tokens.size(); }

  size_t count_breaks() const;
  size_t count_eol() const;
  size_t count_eob() const;
  size_t count_words() const;

  bool operator==(const SegmentedSentence& o) const { return tokens == o.tokens; }
};

enum class ParseMode {
  Strict,   // final token must be <eob>; blocks limited to two lines
  Lenient,  // trailing words without a final break are accepted
};

// Parses one whitespace-separated line; "<eol>"/"<eob>" are breaks only as
// standalone tokens. Throws AdjacentBreaks / LeadingBreak with the token
// index, and MissingFinalEob in strict mode.
SegmentedSentence parse_segmented(std::string_view line, ParseMode mode = ParseMode::Lenient);

// Inverse of parse_segmented: tokens joined by single spaces.
std::string serialize_segmented(const SegmentedSentence& s);

// Structural checks shared by parser and producers. Throws on violation.
void validate_sentence(const SegmentedSentence& s, ParseMode mode);

// All break tokens removed, word order preserved. Idempotent.
std::vector<std::string> strip_breaks(const SegmentedSentence& s);

SegmentedSentence strip_breaks_sentence(const SegmentedSentence& s);

// Maximal word spans between breaks, each joined by single spaces. Both
// break kinds terminate a line; a trailing span without a final break is a
// line too (lenient data).
std::vector<std::string> split_lines(const SegmentedSentence& s);

// Line lengths in Unicode scalars, including internal spaces.
std::vector<size_t> line_lengths(const SegmentedSentence& s);

struct Corpus {
  std::vector<SegmentedSentence> sentences;
  std::string language;  // BCP-47-style tag, e.g. "es"
  std::string name;

  size_t size() const { return sentences.size(); }
};

// One sentence per line, UTF-8, tokens space-separated, breaks inline.
Corpus read_corpus(std::istream& in, ParseMode mode, std::string language = {},
                   std::string name = {});
Corpus read_corpus_file(const std::string& path, ParseMode mode, std::string language = {});
void write_corpus(std::ostream& out, const Corpus& c);
void write_corpus_file(const std::string& path, const Corpus& c);

}  // namespace subseg
