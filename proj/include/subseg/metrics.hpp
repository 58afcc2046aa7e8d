#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "subseg/bleu.hpp"
#include "subseg/corpus.hpp"
#include "subseg/sigma.hpp"

namespace subseg {

struct BreakCounts {
  uint64_t eol_pred = 0, eol_ref = 0;
  uint64_t eob_pred = 0, eob_ref = 0;
};

BreakCounts count_breaks(const std::vector<SegmentedSentence>& hyps,
                         const std::vector<SegmentedSentence>& refs);

// Percentage of lines not exceeding `limit` characters.
double cpl_conformity(const std::vector<SegmentedSentence>& sents, size_t limit = 42);

// (pred / ref * 100) - 100; negative means the segmenter under-generates.
double break_coverage(const BreakCounts& counts, BreakKind kind);

struct BootstrapResult {
  double p_value = 1.0;   // two-sided
  double win_rate_a = 0;  // fraction of resamples where A strictly beats B
  double win_rate_b = 0;
  uint64_t ties = 0;
  uint32_t samples = 0;
  double bleu_a = 0, bleu_b = 0;  // full-corpus scores
};

// Paired bootstrap resampling over sentences (Koehn-style). Ties count as
// wins for neither side; the two-sided p splits them evenly between the
// sides. Deterministic given the seed.
BootstrapResult paired_bootstrap(const std::vector<std::string>& hyp_a,
                                 const std::vector<std::string>& hyp_b,
                                 const std::vector<std::string>& refs, uint32_t samples,
                                 uint64_t seed);

struct BreakKindStats {
  uint64_t total = 0;               // breaks of this kind
  uint64_t after_punctuation = 0;   // preceding word ends in punctuation
  uint64_t with_following_word = 0; // denominator for the function-word rate
  uint64_t before_function_word = 0;
  double pct_after_punctuation() const {
    return total ? 100.0 * static_cast<double>(after_punctuation) / static_cast<double>(total) : 0;
  }
  double pct_before_function_word() const {
    return with_following_word ? 100.0 * static_cast<double>(before_function_word) /
                                     static_cast<double>(with_following_word)
                               : 0;
  }
};

struct BreakPatternStats {
  std::optional<BreakKindStats> eol;  // absent when the corpus has no <eol>
  std::optional<BreakKindStats> eob;
};

BreakPatternStats break_pattern_stats(const std::vector<SegmentedSentence>& sents,
                                      const std::set<std::string>& function_words);

// One word per line, '#' comments allowed.
std::set<std::string> read_function_words(const std::string& path);

struct EvaluationReport {
  BleuScore bleu;  // breaks stripped
  double sigma = 0.0;
  double cpl_conformity = 0.0;
  std::optional<double> eol_coverage;  // absent when the reference has none
  std::optional<double> eob_coverage;
  BreakCounts counts;
  std::optional<BreakPatternStats> pattern_stats;
};

// The paper-style evaluation bundle for a hypothesis/reference corpus pair.
EvaluationReport evaluate(const std::vector<SegmentedSentence>& hyps,
                          const std::vector<SegmentedSentence>& refs, size_t cpl_limit = 42,
                          const std::set<std::string>* function_words = nullptr);

std::string report_to_json(const EvaluationReport& r);
std::string report_to_text(const EvaluationReport& r);

}  // namespace subseg
