#include "subseg/sigma.hpp"

#include <algorithm>

#include "subseg/error.hpp"
#include "subseg/tok13a.hpp"

namespace subseg {

namespace {

bool is_break_token(const std::string& t) { return t == kEolLit || t == kEobLit; }

}  // namespace

std::vector<int> align_tokens(const std::vector<std::string>& ref,
                              const std::vector<std::string>& hyp) {
  const size_t m = ref.size(), n = hyp.size();
  // d[i][j]: edit distance between ref[0..i) and hyp[0..j).
  std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1, 0));
  for (size_t i = 0; i <= m; ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= n; ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= m; ++i) {
    for (size_t j = 1; j <= n; ++j) {
      int sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int del = d[i - 1][j] + 1;
      int ins = d[i][j - 1] + 1;
      d[i][j] = std::min({sub, del, ins});
    }
  }
  std::vector<int> map(m, -1);
  size_t i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && d[i][j] == d[i - 1][j - 1]) {
      map[i - 1] = static_cast<int>(j - 1);  // match
      --i, --j;
    } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
      map[i - 1] = static_cast<int>(j - 1);  // substitution
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      --i;  // deletion: ref token unaligned
    } else {
      --j;  // insertion
    }
  }
  return map;
}

std::vector<std::string> sigma_oracle_tokens(const std::vector<std::string>& hyp_toks,
                                             const std::vector<std::string>& ref_toks) {
  std::vector<std::string> hyp_words, ref_words;
  // Break k in the reference sits after ref word boundary positions[k].
  std::vector<std::pair<size_t, std::string>> ref_breaks;  // (word count before, literal)
  for (const auto& t : hyp_toks)
    if (!is_break_token(t)) hyp_words.push_back(t);
  for (const auto& t : ref_toks) {
    if (is_break_token(t))
      ref_breaks.emplace_back(ref_words.size(), t);
    else
      ref_words.push_back(t);
  }

  std::vector<int> map = align_tokens(ref_words, hyp_words);
  // Fill deletions with the nearest preceding aligned hypothesis index.
  std::vector<int> aligned(ref_words.size(), -1);
  int last = -1;
  for (size_t i = 0; i < ref_words.size(); ++i) {
    if (map[i] >= 0) last = map[i];
    aligned[i] = last;
  }

  // Break after ref word i-1 goes after hyp word aligned[i-1]; a break with
  // no preceding aligned word lands before the first hypothesis word.
  std::vector<std::vector<std::string>> at(hyp_words.size() + 1);
  for (const auto& [pos, lit] : ref_breaks) {
    int h = pos == 0 ? -1 : aligned[pos - 1];
    at[static_cast<size_t>(h + 1)].push_back(lit);
  }

  std::vector<std::string> oracle;
  oracle.reserve(hyp_toks.size() + ref_breaks.size());
  for (size_t j = 0; j <= hyp_words.size(); ++j) {
    for (const auto& lit : at[j]) oracle.push_back(lit);
    if (j < hyp_words.size()) oracle.push_back(hyp_words[j]);
  }
  return oracle;
}

SigmaResult sigma(const std::vector<SegmentedSentence>& hyps,
                  const std::vector<SegmentedSentence>& refs) {
  if (hyps.size() != refs.size())
    fail(Err::LengthMismatch, std::to_string(hyps.size()) + " hypotheses vs " +
                                  std::to_string(refs.size()) + " references");
  if (hyps.empty()) fail(Err::EmptyCorpus, "no sentences to score");

  std::vector<std::vector<std::string>> hyp_toks(hyps.size()), ref_toks(refs.size()),
      oracle_toks(hyps.size());
  for (size_t i = 0; i < hyps.size(); ++i) {
    hyp_toks[i] = tokenize_13a(serialize_segmented(hyps[i]), /*protect_breaks=*/true);
    ref_toks[i] = tokenize_13a(serialize_segmented(refs[i]), /*protect_breaks=*/true);
    oracle_toks[i] = sigma_oracle_tokens(hyp_toks[i], ref_toks[i]);
  }

  SigmaResult out;
  out.bleu_br = bleu_tokens(hyp_toks, ref_toks);
  out.bleu_star = bleu_tokens(oracle_toks, ref_toks);
  if (out.bleu_star.score <= 0.0)
    fail(Err::ZeroUpperBound, "oracle break-inclusive BLEU is zero; Sigma undefined");
  out.sigma = std::max(0.0, 100.0 * out.bleu_br.score / out.bleu_star.score);
  return out;
}

}  // namespace subseg
