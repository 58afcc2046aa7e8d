#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace subseg {

enum class Smoothing { Exp, None };

struct BleuScore {
  double score = 0.0;                        // 0..100
  std::array<double, 4> precisions{};        // 0..1
  double brevity_penalty = 1.0;              // (0,1]; 0 for an empty hypothesis
  uint64_t hyp_len = 0;
  uint64_t ref_len = 0;
};

// Per-sentence sufficient statistics. Corpus BLEU is computed from their sum,
// which is what makes bootstrap resampling cheap.
struct BleuStats {
  std::array<uint64_t, 4> matches{};  // clipped n-gram matches, n = 1..4
  std::array<uint64_t, 4> totals{};   // hypothesis n-gram counts
  uint64_t hyp_len = 0;
  uint64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o) {
    for (int n = 0; n < 4; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
    return *this;
  }
};

BleuStats bleu_sentence_stats(const std::vector<std::string>& hyp_tokens,
                              const std::vector<std::string>& ref_tokens);

// BLEU-4 from summed stats: p_n over orders with totals > 0, exponential
// smoothing for zero-match orders, brevity penalty exp(1 - ref/hyp).
BleuScore bleu_from_stats(const BleuStats& stats, Smoothing smoothing = Smoothing::Exp);

// Corpus BLEU over pre-tokenized sentences (single reference).
BleuScore bleu_tokens(const std::vector<std::vector<std::string>>& hyps,
                      const std::vector<std::vector<std::string>>& refs,
                      Smoothing smoothing = Smoothing::Exp);

// Corpus BLEU over raw strings; applies the 13a tokenizer.
BleuScore bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
               Smoothing smoothing = Smoothing::Exp);

}  // namespace subseg
