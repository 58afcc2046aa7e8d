#include "subseg/decode.hpp"

#include <algorithm>
#include <cmath>

#include "subseg/linalg.hpp"

namespace subseg {

namespace {

struct Hyp {
  std::vector<int> ids;  // generated tokens, no eos
  double score_sum = 0.0;
  bool finished = false;

  // Normalized by generated length (eos counted for finished hypotheses).
  double normalized() const {
    size_t len = ids.size() + (finished ? 1 : 0);
    return score_sum / static_cast<double>(std::max<size_t>(len, 1));
  }
};

}  // namespace

std::vector<int> beam_search(const StepScorer& score_step, const std::vector<int>& forced_prefix,
                             int eos_id, size_t vocab_size, const BeamConfig& cfg) {
  const size_t beam = std::max<size_t>(cfg.beam_size, 1);
  std::vector<Hyp> hyps{Hyp{}};

  for (size_t step = 0; step < cfg.max_len; ++step) {
    bool any_open = std::any_of(hyps.begin(), hyps.end(), [](const Hyp& h) { return !h.finished; });
    if (!any_open) break;

    struct Cand {
      double norm;
      double sum;
      size_t parent;
      int token;  // -1 carries a finished hypothesis forward
    };
    std::vector<Cand> cands;
    for (size_t b = 0; b < hyps.size(); ++b) {
      const Hyp& h = hyps[b];
      if (h.finished) {
        cands.push_back({h.normalized(), h.score_sum, b, -1});
        continue;
      }
      std::vector<int> prefix = forced_prefix;
      prefix.insert(prefix.end(), h.ids.begin(), h.ids.end());
      std::vector<float> lp = score_step(prefix);
      size_t gen_len = h.ids.size() + 1;
      for (size_t t = 0; t < vocab_size; ++t) {
        double sum = h.score_sum + lp[t];
        cands.push_back({sum / static_cast<double>(gen_len), sum, b, static_cast<int>(t)});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.norm != b.norm) return a.norm > b.norm;
      return a.token < b.token;
    });

    std::vector<Hyp> next;
    for (const Cand& c : cands) {
      if (next.size() == beam) break;
      if (c.token < 0) {
        next.push_back(hyps[c.parent]);
        continue;
      }
      Hyp h = hyps[c.parent];
      h.score_sum = c.sum;
      if (c.token == eos_id) {
        h.finished = true;
      } else {
        h.ids.push_back(c.token);
      }
      next.push_back(std::move(h));
    }
    hyps = std::move(next);
  }

  auto best = std::max_element(hyps.begin(), hyps.end(), [](const Hyp& a, const Hyp& b) {
    if (a.finished != b.finished) return b.finished;
    return a.normalized() < b.normalized();
  });
  return best->ids;
}

std::vector<int> beam_decode(const Model<float>& model, const FeatureMatrix* speech,
                             const std::vector<int>* src_ids, const std::string& language_token,
                             const BeamConfig& cfg) {
  const ModelConfig& mc = model.config();
  const Vocab& vocab = model.vocab();

  std::vector<int> forced{vocab.bos};
  if (mc.mode != ModelMode::Textual) {
    int lt = vocab.find(language_token);
    if (lt < 0)
      fail(Err::UnknownLanguageToken,
           "language token \"" + language_token + "\" not in the model vocabulary");
    forced.push_back(lt);
  }

  Tensor<float> enc_t, enc_s;
  const Tensor<float>* pt = nullptr;
  const Tensor<float>* ps = nullptr;
  if (mc.mode != ModelMode::SpeechOnly) {
    if (!src_ids) fail(Err::ModeMismatch, "source text required");
    enc_t = model.encode_text(*src_ids);
    pt = &enc_t;
  }
  if (mc.mode != ModelMode::Textual) {
    if (!speech) fail(Err::ModeMismatch, "speech features required");
    enc_s = model.encode_speech(*speech);
    ps = &enc_s;
  }

  StepScorer scorer = [&](const std::vector<int>& prefix) {
    Tensor<float> logits = model.decode(pt, ps, prefix);
    std::vector<float> lp(logits.row(logits.rows() - 1),
                          logits.row(logits.rows() - 1) + logits.cols());
    log_softmax_row(lp.data(), lp.size());
    return lp;
  };
  return beam_search(scorer, forced, vocab.eos, vocab.size(), cfg);
}

}  // namespace subseg
