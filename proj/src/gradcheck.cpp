#include "subseg/gradcheck.hpp"

#include <cmath>
#include <set>

#include "subseg/train.hpp"

namespace subseg {

namespace {

// Small but exercises every block: two layers would only slow things down.
ModelConfig tiny_config(ModelMode mode) {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.ffn_dim = 16;
  cfg.text_enc_layers = mode == ModelMode::SpeechOnly ? 0 : 1;
  cfg.speech_enc_layers = mode == ModelMode::Textual ? 0 : 1;
  cfg.dec_layers = 1;
  cfg.speech_downsample = 2;
  cfg.speech_feat_dims = 5;
  cfg.mode = mode;
  cfg.dropout = 0.0;
  cfg.vocab = {std::string(kPadTok), std::string(kBosTok),  std::string(kEosTok),
               std::string(kBlankTok), std::string(kEolLit), std::string(kEobLit),
               lang_token("aa"),       std::string(kSpaceTok), "a", "b", "c", "d"};
  return cfg;
}

FeatureMatrix random_features(uint32_t frames, uint32_t dims, Rng& rng) {
  FeatureMatrix m;
  m.frames = frames;
  m.dims = dims;
  m.frame_shift_ms = 10;
  m.data.resize(static_cast<size_t>(frames) * dims);
  for (auto& x : m.data) x = static_cast<float>(rng.next_uniform(-1.0, 1.0));
  return m;
}

}  // namespace

GradCheckResult gradient_check(ModelMode mode, uint64_t seed) {
  Model<double> model(tiny_config(mode));
  model.init_weights(seed);

  Rng rng(Rng::derive(seed, 7));
  Dataset ds;
  {
    Utterance u;
    u.id = "g0";
    u.features = random_features(18, 5, rng);
    u.source_words = {"ab", "ca"};
    u.target = parse_segmented("ab <eol> ca <eob>", ParseMode::Strict);
    u.target_language = "aa";
    ds.items.push_back(u);
    Utterance w;
    w.id = "g1";
    w.features = random_features(14, 5, rng);
    w.source_words = {"dba"};
    w.target = parse_segmented("dba <eob>", ParseMode::Strict);
    w.target_language = "aa";
    ds.items.push_back(w);
  }

  std::vector<EncodedItem> items = encode_dataset_t(ds, model);
  std::vector<const EncodedItem*> batch{&items[0], &items[1]};
  const double eps_smooth = 0.1, lambda = 0.5;

  Parameters<double> grads = model.zero_grads();
  compute_loss_and_grads(model, batch, eps_smooth, lambda, &grads);

  auto ptensors = named_tensors(model.params());
  auto gtensors = named_tensors(grads);
  size_t total = 0;
  for (auto& [name, t] : ptensors) total += t->numel();

  const size_t want = std::min<size_t>(total, 220);
  std::set<size_t> picked;
  while (picked.size() < want) picked.insert(static_cast<size_t>(rng.next_below(total)));

  const double h = 1e-5;
  GradCheckResult res;
  res.total_params = total;
  for (size_t flat : picked) {
    // Locate the owning tensor.
    size_t ti = 0, off = flat;
    while (off >= ptensors[ti].second->numel()) {
      off -= ptensors[ti].second->numel();
      ++ti;
    }
    double* slot = ptensors[ti].second->data() + off;
    const double orig = *slot;
    *slot = orig + h;
    double up = compute_loss_and_grads<double>(model, batch, eps_smooth, lambda, nullptr).total(lambda);
    *slot = orig - h;
    double dn = compute_loss_and_grads<double>(model, batch, eps_smooth, lambda, nullptr).total(lambda);
    *slot = orig;
    double numeric = (up - dn) / (2.0 * h);
    double analytic = gtensors[ti].second->v[off];
    double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
    double rel = std::fabs(numeric - analytic) / denom;
    if (rel > res.max_rel_err) res.max_rel_err = rel;
    ++res.checked;
  }
  return res;
}

}  // namespace subseg
