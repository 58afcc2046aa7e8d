#pragma once

#include <string>
#include <vector>

#include "subseg/bleu.hpp"
#include "subseg/corpus.hpp"

namespace subseg {

// Sigma = 100 * BLEU_br / BLEU*_br, where BLEU_br scores the break-inclusive
// serializations (13a tokens, breaks kept atomic) and BLEU*_br scores an
// oracle hypothesis: the hypothesis text with the reference's breaks
// re-inserted through a minimum-edit-distance word alignment.
struct SigmaResult {
  double sigma = 0.0;
  BleuScore bleu_br;    // achieved
  BleuScore bleu_star;  // oracle upper bound
};

SigmaResult sigma(const std::vector<SegmentedSentence>& hyps,
                  const std::vector<SegmentedSentence>& refs);

// Levenshtein alignment from reference to hypothesis tokens. Entry i holds
// the hypothesis index ref token i maps to, or -1 when deleted. Backtrace
// tie-breaking: match > substitution > deletion > insertion.
std::vector<int> align_tokens(const std::vector<std::string>& ref,
                              const std::vector<std::string>& hyp);

// The oracle projection used for the Sigma denominator: strips the
// hypothesis of its own breaks and inserts one break per reference break at
// the aligned position (after the hypothesis token aligned to the reference
// token preceding the break; deleted tokens fall back to the nearest
// preceding aligned one).
std::vector<std::string> sigma_oracle_tokens(const std::vector<std::string>& hyp_tokens_with_breaks,
                                             const std::vector<std::string>& ref_tokens_with_breaks);

}  // namespace subseg
