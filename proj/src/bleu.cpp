#include "subseg/bleu.hpp"

#include <cmath>
#include <unordered_map>

#include "subseg/error.hpp"
#include "subseg/tok13a.hpp"

namespace subseg {

namespace {

// n-grams keyed by their tokens joined with an unlikely separator byte.
void count_ngrams(const std::vector<std::string>& toks, int n,
                  std::unordered_map<std::string, uint64_t>& out) {
  if (toks.size() < static_cast<size_t>(n)) return;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key.push_back('\x1f');
      key.append(toks[i + k]);
    }
    ++out[key];
  }
}

}  // namespace

BleuStats bleu_sentence_stats(const std::vector<std::string>& hyp_tokens,
                              const std::vector<std::string>& ref_tokens) {
  BleuStats st;
  st.hyp_len = hyp_tokens.size();
  st.ref_len = ref_tokens.size();
  for (int n = 1; n <= 4; ++n) {
    if (hyp_tokens.size() < static_cast<size_t>(n)) break;
    st.totals[n - 1] = hyp_tokens.size() - n + 1;
    std::unordered_map<std::string, uint64_t> hyp_counts, ref_counts;
    count_ngrams(hyp_tokens, n, hyp_counts);
    count_ngrams(ref_tokens, n, ref_counts);
    uint64_t clipped = 0;
    for (const auto& [ngram, count] : hyp_counts) {
      auto it = ref_counts.find(ngram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    st.matches[n - 1] = clipped;
  }
  return st;
}

BleuScore bleu_from_stats(const BleuStats& stats, Smoothing smoothing) {
  BleuScore out;
  out.hyp_len = stats.hyp_len;
  out.ref_len = stats.ref_len;

  if (stats.hyp_len == 0) {
    out.brevity_penalty = 0.0;
    out.score = 0.0;
    return out;
  }

  double log_sum = 0.0;
  int orders = 0;
  double smooth = 1.0;
  bool zero = false;
  for (int n = 0; n < 4; ++n) {
    if (stats.totals[n] == 0) continue;
    double p;
    if (stats.matches[n] == 0) {
      if (smoothing == Smoothing::Exp) {
        smooth *= 2.0;
        p = 1.0 / (smooth * static_cast<double>(stats.totals[n]));
      } else {
        p = 0.0;
        zero = true;
      }
    } else {
      p = static_cast<double>(stats.matches[n]) / static_cast<double>(stats.totals[n]);
    }
    out.precisions[n] = p;
    if (p > 0.0) log_sum += std::log(p);
    ++orders;
  }

  out.brevity_penalty =
      stats.hyp_len > stats.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(stats.ref_len) / static_cast<double>(stats.hyp_len));

  if (orders == 0 || zero) {
    out.score = 0.0;
    return out;
  }
  out.score = 100.0 * out.brevity_penalty * std::exp(log_sum / orders);
  return out;
}

BleuScore bleu_tokens(const std::vector<std::vector<std::string>>& hyps,
                      const std::vector<std::vector<std::string>>& refs, Smoothing smoothing) {
  if (hyps.size() != refs.size())
    fail(Err::LengthMismatch, std::to_string(hyps.size()) + " hypotheses vs " +
                                  std::to_string(refs.size()) + " references");
  if (hyps.empty()) fail(Err::EmptyCorpus, "no sentences to score");
  BleuStats total;
  for (size_t i = 0; i < hyps.size(); ++i) total += bleu_sentence_stats(hyps[i], refs[i]);
  return bleu_from_stats(total, smoothing);
}

BleuScore bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
               Smoothing smoothing) {
  if (hyps.size() != refs.size())
    fail(Err::LengthMismatch, std::to_string(hyps.size()) + " hypotheses vs " +
                                  std::to_string(refs.size()) + " references");
  if (hyps.empty()) fail(Err::EmptyCorpus, "no sentences to score");
  std::vector<std::vector<std::string>> h(hyps.size()), r(refs.size());
  for (size_t i = 0; i < hyps.size(); ++i) {
    h[i] = tokenize_13a(hyps[i]);
    r[i] = tokenize_13a(refs[i]);
  }
  return bleu_tokens(h, r, smoothing);
}

}  // namespace subseg
