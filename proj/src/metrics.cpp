#include "subseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "subseg/error.hpp"
#include "subseg/rng.hpp"
#include "subseg/tok13a.hpp"
#include "subseg/utf8.hpp"

namespace subseg {

namespace {

// Punctuation that can close a clause: . , ! ? : ; ... " ' ) ] } >> em-dash
const std::set<uint32_t>& punctuation_set() {
  static const std::set<uint32_t> punct = {
      '.', ',', '!', '?', ':', ';', 0x2026 /* ... */, '"', '\'', ')', ']', '}',
      0x00BB /* >> */, 0x2014 /* em dash */,
  };
  return punct;
}

}  // namespace

BreakCounts count_breaks(const std::vector<SegmentedSentence>& hyps,
                         const std::vector<SegmentedSentence>& refs) {
  BreakCounts c;
  for (const auto& s : hyps) {
    c.eol_pred += s.count_eol();
    c.eob_pred += s.count_eob();
  }
  for (const auto& s : refs) {
    c.eol_ref += s.count_eol();
    c.eob_ref += s.count_eob();
  }
  return c;
}

double cpl_conformity(const std::vector<SegmentedSentence>& sents, size_t limit) {
  if (sents.empty()) fail(Err::EmptyCorpus, "no sentences");
  uint64_t lines = 0, conformant = 0;
  for (const auto& s : sents) {
    for (size_t len : line_lengths(s)) {
      ++lines;
      conformant += len <= limit;
    }
  }
  if (lines == 0) fail(Err::EmptyCorpus, "no subtitle lines");
  return 100.0 * static_cast<double>(conformant) / static_cast<double>(lines);
}

double break_coverage(const BreakCounts& counts, BreakKind kind) {
  uint64_t pred = kind == BreakKind::Eol ? counts.eol_pred : counts.eob_pred;
  uint64_t ref = kind == BreakKind::Eol ? counts.eol_ref : counts.eob_ref;
  if (ref == 0)
    fail(Err::ZeroReferenceBreaks,
         std::string("reference has no ") + std::string(break_literal(kind)) + " breaks");
  return (static_cast<double>(pred) / static_cast<double>(ref)) * 100.0 - 100.0;
}

BootstrapResult paired_bootstrap(const std::vector<std::string>& hyp_a,
                                 const std::vector<std::string>& hyp_b,
                                 const std::vector<std::string>& refs, uint32_t samples,
                                 uint64_t seed) {
  if (hyp_a.size() != hyp_b.size() || hyp_a.size() != refs.size())
    fail(Err::LengthMismatch, "hypothesis/reference corpora differ in size");
  if (hyp_a.empty()) fail(Err::EmptyCorpus, "no sentences");

  const size_t n = refs.size();
  std::vector<BleuStats> stats_a(n), stats_b(n);
  for (size_t i = 0; i < n; ++i) {
    auto ref_toks = tokenize_13a(refs[i]);
    stats_a[i] = bleu_sentence_stats(tokenize_13a(hyp_a[i]), ref_toks);
    stats_b[i] = bleu_sentence_stats(tokenize_13a(hyp_b[i]), ref_toks);
  }

  BleuStats full_a, full_b;
  for (size_t i = 0; i < n; ++i) {
    full_a += stats_a[i];
    full_b += stats_b[i];
  }

  uint64_t wins_a = 0, wins_b = 0, ties = 0;
  for (uint32_t s = 0; s < samples; ++s) {
    Rng rng(Rng::derive(seed, s));
    BleuStats acc_a, acc_b;
    for (size_t k = 0; k < n; ++k) {
      size_t idx = static_cast<size_t>(rng.next_below(n));
      acc_a += stats_a[idx];
      acc_b += stats_b[idx];
    }
    double a = bleu_from_stats(acc_a).score;
    double b = bleu_from_stats(acc_b).score;
    if (a > b)
      ++wins_a;
    else if (b > a)
      ++wins_b;
    else
      ++ties;
  }

  BootstrapResult r;
  r.samples = samples;
  r.ties = ties;
  r.win_rate_a = static_cast<double>(wins_a) / samples;
  r.win_rate_b = static_cast<double>(wins_b) / samples;
  // Two-sided p; ties support neither side so they are split evenly.
  double pa = (static_cast<double>(wins_a) + static_cast<double>(ties) / 2.0) / samples;
  double pb = (static_cast<double>(wins_b) + static_cast<double>(ties) / 2.0) / samples;
  r.p_value = std::min(1.0, 2.0 * std::min(pa, pb));
  r.bleu_a = bleu_from_stats(full_a).score;
  r.bleu_b = bleu_from_stats(full_b).score;
  return r;
}

BreakPatternStats break_pattern_stats(const std::vector<SegmentedSentence>& sents,
                                      const std::set<std::string>& function_words) {
  if (sents.empty()) fail(Err::EmptyCorpus, "no sentences");
  BreakKindStats eol, eob;
  const auto& punct = punctuation_set();
  for (const auto& s : sents) {
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      const Token& t = s.tokens[i];
      if (!t.is_break()) continue;
      BreakKindStats& st = t.is_eol() ? eol : eob;
      ++st.total;
      // Well-formed sentences guarantee i > 0 and a word before each break.
      if (i > 0 && !s.tokens[i - 1].is_break() &&
          punct.count(utf8_last(s.tokens[i - 1].text)) > 0)
        ++st.after_punctuation;
      if (i + 1 < s.tokens.size() && !s.tokens[i + 1].is_break()) {
        ++st.with_following_word;
        if (function_words.count(s.tokens[i + 1].text) > 0) ++st.before_function_word;
      }
    }
  }
  BreakPatternStats out;
  if (eol.total > 0) out.eol = eol;
  if (eob.total > 0) out.eob = eob;
  return out;
}

std::set<std::string> read_function_words(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoError, "cannot open " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t a = line.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t");
    words.insert(line.substr(a, b - a + 1));
  }
  return words;
}

EvaluationReport evaluate(const std::vector<SegmentedSentence>& hyps,
                          const std::vector<SegmentedSentence>& refs, size_t cpl_limit,
                          const std::set<std::string>* function_words) {
  if (hyps.size() != refs.size())
    fail(Err::LengthMismatch, std::to_string(hyps.size()) + " hypotheses vs " +
                                  std::to_string(refs.size()) + " references");
  if (hyps.empty()) fail(Err::EmptyCorpus, "no sentences");

  EvaluationReport r;
  // Translation quality on the break-free text.
  std::vector<std::vector<std::string>> h(hyps.size()), g(refs.size());
  for (size_t i = 0; i < hyps.size(); ++i) {
    h[i] = tokenize_13a(serialize_segmented(strip_breaks_sentence(hyps[i])));
    g[i] = tokenize_13a(serialize_segmented(strip_breaks_sentence(refs[i])));
  }
  r.bleu = bleu_tokens(h, g);
  r.sigma = sigma(hyps, refs).sigma;
  r.cpl_conformity = cpl_conformity(hyps, cpl_limit);
  r.counts = count_breaks(hyps, refs);
  if (r.counts.eol_ref > 0) r.eol_coverage = break_coverage(r.counts, BreakKind::Eol);
  if (r.counts.eob_ref > 0) r.eob_coverage = break_coverage(r.counts, BreakKind::Eob);
  if (function_words) r.pattern_stats = break_pattern_stats(hyps, *function_words);
  return r;
}

namespace {

nlohmann::json pattern_json(const BreakPatternStats& p) {
  nlohmann::json out;
  auto kind_json = [](const BreakKindStats& k) {
    return nlohmann::json{{"total", k.total},
                          {"after_punctuation_pct", k.pct_after_punctuation()},
                          {"before_function_word_pct", k.pct_before_function_word()}};
  };
  out["eol"] = p.eol ? kind_json(*p.eol) : nlohmann::json(nullptr);
  out["eob"] = p.eob ? kind_json(*p.eob) : nlohmann::json(nullptr);
  return out;
}

}  // namespace

std::string report_to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["bleu"] = r.bleu.score;
  j["sigma"] = r.sigma;
  j["cpl"] = r.cpl_conformity;
  j["eol_coverage"] = r.eol_coverage ? nlohmann::json(*r.eol_coverage) : nlohmann::json(nullptr);
  j["eob_coverage"] = r.eob_coverage ? nlohmann::json(*r.eob_coverage) : nlohmann::json(nullptr);
  j["counts"] = {{"eol_pred", r.counts.eol_pred},
                 {"eol_ref", r.counts.eol_ref},
                 {"eob_pred", r.counts.eob_pred},
                 {"eob_ref", r.counts.eob_ref}};
  j["pattern_stats"] = r.pattern_stats ? pattern_json(*r.pattern_stats) : nlohmann::json(nullptr);
  return j.dump(2);
}

std::string report_to_text(const EvaluationReport& r) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "BLEU   %.2f (bp %.3f, hyp %llu, ref %llu)\n", r.bleu.score,
                r.bleu.brevity_penalty, static_cast<unsigned long long>(r.bleu.hyp_len),
                static_cast<unsigned long long>(r.bleu.ref_len));
  out += buf;
  std::snprintf(buf, sizeof buf, "Sigma  %.2f\n", r.sigma);
  out += buf;
  std::snprintf(buf, sizeof buf, "CPL    %.1f%%\n", r.cpl_conformity);
  out += buf;
  auto cov = [&](const char* name, const std::optional<double>& v) {
    if (v)
      std::snprintf(buf, sizeof buf, "%s    %+.1f%%\n", name, *v);
    else
      std::snprintf(buf, sizeof buf, "%s    n/a (no reference breaks)\n", name);
    out += buf;
  };
  cov("EOL", r.eol_coverage);
  cov("EOB", r.eob_coverage);
  if (r.pattern_stats) {
    auto kind = [&](const char* name, const std::optional<BreakKindStats>& k) {
      if (k)
        std::snprintf(buf, sizeof buf,
                      "%s: %.1f%% after punctuation, %.1f%% before function words (n=%llu)\n",
                      name, k->pct_after_punctuation(), k->pct_before_function_word(),
                      static_cast<unsigned long long>(k->total));
      else
        std::snprintf(buf, sizeof buf, "%s: absent\n", name);
      out += buf;
    };
    kind("<eol>", r.pattern_stats->eol);
    kind("<eob>", r.pattern_stats->eob);
  }
  return out;
}

}  // namespace subseg
