#include "subseg/rulebased.hpp"

#include "subseg/parallel.hpp"
#include "subseg/utf8.hpp"

namespace subseg {

SegmentedSentence count_chars_segment(const std::vector<std::string>& words,
                                      const CountCharsConfig& cfg, Rng& rng) {
  if (words.empty()) fail(Err::EmptyInput, "no words to segment");

  SegmentedSentence out;
  size_t line_len = 0;       // scalars on the current line, incl. internal spaces
  bool prev_break_eol = false;  // previous break in the current block was <eol>

  for (const auto& word : words) {
    size_t wlen = utf8_length(word);
    if (wlen > cfg.limit)
      fail(Err::WordExceedsLimit,
           "word \"" + word + "\" is longer than the limit " + std::to_string(cfg.limit));
    if (line_len > 0 && line_len + 1 + wlen > cfg.limit) {
      // The next word (plus its separating space) would cross the limit:
      // insert a break before it.
      double u = rng.next_double();
      bool eol = u < cfg.eol_prob && !prev_break_eol;
      out.tokens.push_back(eol ? Token::eol() : Token::eob());
      prev_break_eol = eol;
      line_len = 0;
    }
    if (line_len > 0) line_len += 1;
    line_len += wlen;
    out.tokens.push_back(Token::word(word));
  }
  out.tokens.push_back(Token::eob());
  validate_sentence(out, ParseMode::Strict);
  return out;
}

Corpus count_chars_segment_corpus(const Corpus& unsegmented, const CountCharsConfig& cfg,
                                  unsigned threads) {
  Corpus out;
  out.language = unsegmented.language;
  out.name = unsegmented.name;
  out.sentences.resize(unsegmented.size());
  parallel_for(unsegmented.size(), threads, [&](size_t i) {
    Rng rng(Rng::derive(cfg.seed, i));
    out.sentences[i] = count_chars_segment(strip_breaks(unsegmented.sentences[i]), cfg, rng);
  });
  return out;
}

}  // namespace subseg
