#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subseg/corpus.hpp"
#include "subseg/rng.hpp"

namespace subseg {

// Count Chars baseline: greedy fill up to a character limit, break kind
// drawn as <eol> with probability eol_prob (never twice in one block).
struct CountCharsConfig {
  size_t limit = 42;       // characters per line, TED guideline
  double eol_prob = 0.25;  // probability a drawn break is <eol>
  uint64_t seed = 0;
};

// Segments one word sequence. One uniform draw per limit-triggered break;
// the forced sentence-final <eob> draws nothing. Every output line is at
// most cfg.limit characters and the output is well-formed strict.
SegmentedSentence count_chars_segment(const std::vector<std::string>& words,
                                      const CountCharsConfig& cfg, Rng& rng);

// Corpus-level wrapper: sentence i uses the derived seed
// Rng::derive(cfg.seed, i), so results are reproducible and independent of
// the thread count.
Corpus count_chars_segment_corpus(const Corpus& unsegmented, const CountCharsConfig& cfg,
                                  unsigned threads = 1);

}  // namespace subseg
