#pragma once

#include <cstdint>
#include <string>

#include "subseg/corpus.hpp"

namespace subseg {

struct PipelineStats {
  uint64_t input_sentences = 0;
  uint64_t kept_sentences = 0;
  uint64_t substituted_breaks = 0;
  uint64_t multi_subtitle_sentences = 0;
  uint64_t single_subtitle_sentences = 0;
  uint64_t single_shortfall = 0;  // singles missing to reach parity

  std::string to_json() const;
};

// Keeps exactly the sentences whose lines are all within `limit` characters.
Corpus filter_conformant(const Corpus& c, size_t limit, PipelineStats& stats);

// Replaces each non-final <eob> by <eol> with probability p, skipping
// positions whose previous break is already <eol>. The sentence-final <eob>
// never changes. Sentence i draws from Rng::derive(seed, i).
Corpus eob_to_eol_substitution(const Corpus& c, double p, uint64_t seed, PipelineStats& stats);

// Pure count bookkeeping for the single/multi balancing step; also used to
// verify the published corpus sizes without materializing text.
struct BalancePlan {
  uint64_t multi = 0;
  uint64_t singles_available = 0;
  uint64_t singles_sampled = 0;
  uint64_t shortfall = 0;  // > 0 when there are fewer singles than multis
  uint64_t output_size = 0;
};

BalancePlan plan_balance(uint64_t multi_count, uint64_t single_count);

// All sentences with >= 2 breaks plus an equal-count uniform sample (without
// replacement) of single-break sentences, in corpus order. Sentences with no
// breaks are dropped.
Corpus balance_single_multi(const Corpus& c, uint64_t seed, PipelineStats& stats);

// strip_breaks applied to every sentence; sentence count preserved.
Corpus make_unsegmented(const Corpus& c);

}  // namespace subseg
