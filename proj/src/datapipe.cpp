#include "subseg/datapipe.hpp"

#include <algorithm>

#include <json.hpp>

#include "subseg/rng.hpp"

namespace subseg {

std::string PipelineStats::to_json() const {
  nlohmann::json j{{"input_sentences", input_sentences},
                   {"kept_sentences", kept_sentences},
                   {"substituted_breaks", substituted_breaks},
                   {"multi_subtitle_sentences", multi_subtitle_sentences},
                   {"single_subtitle_sentences", single_subtitle_sentences},
                   {"single_shortfall", single_shortfall}};
  return j.dump();
}

Corpus filter_conformant(const Corpus& c, size_t limit, PipelineStats& stats) {
  stats.input_sentences = c.size();
  Corpus out;
  out.language = c.language;
  out.name = c.name;
  for (const auto& s : c.sentences) {
    auto lens = line_lengths(s);
    bool ok = std::all_of(lens.begin(), lens.end(), [&](size_t l) { return l <= limit; });
    if (ok) out.sentences.push_back(s);
  }
  stats.kept_sentences = out.size();
  return out;
}

Corpus eob_to_eol_substitution(const Corpus& c, double p, uint64_t seed, PipelineStats& stats) {
  stats.input_sentences = c.size();
  Corpus out = c;
  uint64_t substituted = 0;
  for (size_t si = 0; si < out.sentences.size(); ++si) {
    auto& tokens = out.sentences[si].tokens;
    Rng rng(Rng::derive(seed, si));
    bool prev_eol = false;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (!tokens[i].is_break()) continue;
      if (tokens[i].is_eol()) {
        prev_eol = true;
        continue;
      }
      // Left-to-right scan. The sentence-final <eob> stays, and an <eob>
      // whose previous break is already <eol> stays too (keeps blocks at
      // two lines); suppressed positions consume no draw.
      bool eligible = i + 1 < tokens.size() && !prev_eol;
      if (eligible && rng.next_double() < p) {
        tokens[i] = Token::eol();
        prev_eol = true;
        ++substituted;
      } else {
        prev_eol = false;
      }
    }
  }
  stats.substituted_breaks = substituted;
  stats.kept_sentences = out.size();
  return out;
}

BalancePlan plan_balance(uint64_t multi_count, uint64_t single_count) {
  BalancePlan plan;
  plan.multi = multi_count;
  plan.singles_available = single_count;
  plan.singles_sampled = std::min(multi_count, single_count);
  plan.shortfall = multi_count > single_count ? multi_count - single_count : 0;
  plan.output_size = multi_count + plan.singles_sampled;
  return plan;
}

Corpus balance_single_multi(const Corpus& c, uint64_t seed, PipelineStats& stats) {
  stats.input_sentences = c.size();
  std::vector<size_t> singles;
  uint64_t multi = 0;
  for (size_t i = 0; i < c.sentences.size(); ++i) {
    size_t breaks = c.sentences[i].count_breaks();
    if (breaks >= 2)
      ++multi;
    else if (breaks == 1)
      singles.push_back(i);
  }
  stats.multi_subtitle_sentences = multi;
  stats.single_subtitle_sentences = singles.size();

  BalancePlan plan = plan_balance(multi, singles.size());
  stats.single_shortfall = plan.shortfall;

  // Partial Fisher-Yates, then restore corpus order among the selected.
  Rng rng(seed);
  for (uint64_t k = 0; k < plan.singles_sampled; ++k) {
    uint64_t j = k + rng.next_below(singles.size() - k);
    std::swap(singles[k], singles[j]);
  }
  singles.resize(plan.singles_sampled);
  std::vector<bool> selected(c.size(), false);
  for (size_t idx : singles) selected[idx] = true;

  Corpus out;
  out.language = c.language;
  out.name = c.name;
  out.sentences.reserve(plan.output_size);
  for (size_t i = 0; i < c.sentences.size(); ++i) {
    size_t breaks = c.sentences[i].count_breaks();
    if (breaks >= 2 || (breaks == 1 && selected[i])) out.sentences.push_back(c.sentences[i]);
  }
  stats.kept_sentences = out.size();
  return out;
}

Corpus make_unsegmented(const Corpus& c) {
  Corpus out;
  out.language = c.language;
  out.name = c.name;
  out.sentences.reserve(c.size());
  for (const auto& s : c.sentences) out.sentences.push_back(strip_breaks_sentence(s));
  return out;
}

}  // namespace subseg
