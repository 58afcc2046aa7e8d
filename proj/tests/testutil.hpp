#pragma once

#include <string>
#include <vector>

#include "subseg/corpus.hpp"
#include "subseg/rng.hpp"

namespace subseg::testutil {

inline std::string random_word(Rng& rng, size_t min_len = 1, size_t max_len = 8) {
  size_t len = min_len + static_cast<size_t>(rng.next_below(max_len - min_len + 1));
  std::string w;
  for (size_t i = 0; i < len; ++i)
    w.push_back(static_cast<char>('a' + rng.next_below(26)));
  return w;
}

inline std::vector<std::string> random_words(Rng& rng, size_t count, size_t min_len = 1,
                                             size_t max_len = 8) {
  std::vector<std::string> out;
  for (size_t i = 0; i < count; ++i) out.push_back(random_word(rng, min_len, max_len));
  return out;
}

// Satisfies the base invariants (no leading break, no adjacent breaks);
// lenient shape, may end in a word.
inline SegmentedSentence random_valid_sentence(Rng& rng, size_t max_words = 10) {
  SegmentedSentence s;
  size_t words = 1 + rng.next_below(max_words);
  for (size_t i = 0; i < words; ++i) {
    s.tokens.push_back(Token::word(random_word(rng)));
    if (rng.next_double() < 0.3)
      s.tokens.push_back(rng.next_double() < 0.4 ? Token::eol() : Token::eob());
  }
  if (!s.tokens.empty() && s.tokens.back().is_break() && rng.next_double() < 0.5)
    s.tokens.pop_back();
  if (s.tokens.empty()) s.tokens.push_back(Token::word("x"));
  return s;
}

// Well-formed strict: final <eob>, blocks of at most two lines.
inline SegmentedSentence random_strict_sentence(Rng& rng, size_t max_words = 10,
                                                double break_prob = 0.3, double eol_share = 0.33) {
  SegmentedSentence s;
  size_t words = 1 + rng.next_below(max_words);
  bool open_eol = false;
  for (size_t i = 0; i < words; ++i) {
    s.tokens.push_back(Token::word(random_word(rng)));
    if (i + 1 < words && rng.next_double() < break_prob) {
      bool eol = !open_eol && rng.next_double() < eol_share;
      s.tokens.push_back(eol ? Token::eol() : Token::eob());
      open_eol = eol;
    }
  }
  if (s.tokens.back().is_eol()) s.tokens.back() = Token::eob();
  if (!s.tokens.back().is_eob()) s.tokens.push_back(Token::eob());
  return s;
}

inline Corpus random_strict_corpus(Rng& rng, size_t sentences, size_t max_words = 10) {
  Corpus c;
  for (size_t i = 0; i < sentences; ++i)
    c.sentences.push_back(random_strict_sentence(rng, max_words));
  return c;
}

}  // namespace subseg::testutil
