#include "subseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "subseg/ctc.hpp"
#include "subseg/linalg.hpp"

namespace subseg {

void apply_train_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "batch_size")
      cfg.batch_size = std::stoul(value);
    else if (key == "steps")
      cfg.steps = std::stoull(value);
    else if (key == "lr" || key == "base_lr")
      cfg.base_lr = std::stod(value);
    else if (key == "warmup" || key == "warmup_steps")
      cfg.warmup = std::stoull(value);
    else if (key == "label_smoothing")
      cfg.label_smoothing = std::stod(value);
    else if (key == "ctc_weight")
      cfg.ctc_weight = std::stod(value);
    else if (key == "clip_norm")
      cfg.clip_norm = std::stod(value);
    else if (key == "seed")
      cfg.seed = std::stoull(value);
    else if (key == "save_every")
      cfg.save_every = std::stoul(value);
    else if (key == "log_every")
      cfg.log_every = std::stoul(value);
    else
      fail(Err::BadFormat, "unknown training config key \"" + key + "\"");
  } catch (const std::invalid_argument&) {
    fail(Err::BadFormat, "bad value \"" + value + "\" for training config key \"" + key + "\"");
  }
}

TrainConfig read_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoError, "cannot open " + path);
  TrainConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        fail(Err::BadFormat, "expected key=value on line " + std::to_string(lineno), lineno);
      continue;
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    apply_train_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

template <class T>
std::vector<EncodedItem> encode_dataset_t(const Dataset& ds, const Model<T>& model) {
  const ModelConfig& cfg = model.config();
  const Vocab& vocab = model.vocab();
  std::vector<EncodedItem> out;
  out.reserve(ds.size());
  for (const auto& u : ds.items) {
    EncodedItem e;
    e.utt = &u;
    if (cfg.mode != ModelMode::SpeechOnly) e.src_ids = vocab.encode_words(u.source_words);
    if (cfg.mode != ModelMode::Textual) {
      if (!u.features)
        fail(Err::FeatureCountMismatch, "utterance \"" + u.id + "\" has no speech features");
      e.ctc_ids = vocab.encode_words(u.source_words);
      int lt = vocab.find(lang_token(u.target_language));
      if (lt < 0)
        fail(Err::UnknownLanguageToken,
             "language token for \"" + u.target_language + "\" not in vocabulary");
      e.tgt_ids.push_back(lt);
    }
    auto sent_ids = vocab.encode_sentence(u.target);
    e.tgt_ids.insert(e.tgt_ids.end(), sent_ids.begin(), sent_ids.end());
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<EncodedItem> encode_dataset(const Dataset& ds, const Model<float>& model) {
  return encode_dataset_t(ds, model);
}

template <class T>
LossParts compute_loss_and_grads(const Model<T>& model,
                                 const std::vector<const EncodedItem*>& batch,
                                 double label_smoothing, double ctc_weight, Parameters<T>* grads,
                                 DropoutCtx drop) {
  if (batch.empty()) fail(Err::EmptyInput, "empty batch");
  const ModelConfig& cfg = model.config();
  const Vocab& vocab = model.vocab();
  const size_t v = vocab.size();
  const bool use_text = cfg.mode != ModelMode::SpeechOnly;
  const bool use_speech = cfg.mode != ModelMode::Textual;

  LossParts parts;
  for (const EncodedItem* it : batch) parts.tokens += it->tgt_ids.size() + 1;  // + eos
  const double token_w = 1.0 / static_cast<double>(parts.tokens);
  const double eps = label_smoothing;

  for (const EncodedItem* it : batch) {
    TextEncCache<T> tcache;
    SpeechEncCache<T> scache;
    Tensor<T> enc_t, enc_s;
    if (use_text) enc_t = model.encode_text(it->src_ids, grads ? &tcache : nullptr, drop);
    if (use_speech)
      enc_s = model.encode_speech(*it->utt->features, grads ? &scache : nullptr, drop);

    std::vector<int> prefix{vocab.bos};
    prefix.insert(prefix.end(), it->tgt_ids.begin(), it->tgt_ids.end());
    std::vector<int> targets = it->tgt_ids;
    targets.push_back(vocab.eos);

    DecoderCache<T> dcache;
    Tensor<T> logits = model.decode(use_text ? &enc_t : nullptr, use_speech ? &enc_s : nullptr,
                                    prefix, grads ? &dcache : nullptr, drop);

    // Label-smoothed cross-entropy, per-token averaged over the batch.
    Tensor<T> dlogits;
    if (grads) {
      dlogits.shape = logits.shape;
      dlogits.v.assign(logits.numel(), T(0));
    }
    for (size_t i = 0; i < targets.size(); ++i) {
      std::vector<T> lp(logits.row(i), logits.row(i) + v);
      log_softmax_row(lp.data(), v);
      double sum_lp = 0.0;
      for (size_t k = 0; k < v; ++k) sum_lp += static_cast<double>(lp[k]);
      int y = targets[i];
      parts.ce -= token_w * ((1.0 - eps) * static_cast<double>(lp[static_cast<size_t>(y)]) +
                             eps / static_cast<double>(v) * sum_lp);
      if (grads) {
        T* drow = dlogits.row(i);
        for (size_t k = 0; k < v; ++k)
          drow[k] = static_cast<T>((std::exp(static_cast<double>(lp[k])) -
                                    eps / static_cast<double>(v)) *
                                   token_w);
        drow[static_cast<size_t>(y)] -= static_cast<T>((1.0 - eps) * token_w);
      }
    }

    double item_ctc = 0.0;
    Tensor<T> dctc;
    if (use_speech) {
      // Per-utterance CTC normalized by its target length, averaged over the
      // batch; the lambda weight enters through grad_scale and total().
      const double ctc_len = static_cast<double>(it->ctc_ids.size());
      const double ctc_scale = 1.0 / (static_cast<double>(batch.size()) * ctc_len);
      Tensor<T> clogits = model.ctc_logits(grads ? scache.out : enc_s);
      if (grads) {
        item_ctc = static_cast<double>(ctc_loss_and_grad(clogits, it->ctc_ids, vocab.blank, dctc,
                                                         static_cast<T>(ctc_weight * ctc_scale)));
      } else {
        for (size_t r = 0; r < clogits.rows(); ++r) log_softmax_row(clogits.row(r), v);
        item_ctc = static_cast<double>(ctc_loss(clogits, it->ctc_ids, vocab.blank));
      }
      parts.ctc += item_ctc * ctc_scale;
    }

    if (grads) {
      Tensor<T> denc_t, denc_s;
      if (use_text) denc_t = Tensor<T>({enc_t.rows(), enc_t.cols()});
      if (use_speech) denc_s = Tensor<T>({scache.out.rows(), scache.out.cols()});
      model.decode_backward(dcache, dlogits, *grads, use_text ? &denc_t : nullptr,
                            use_speech ? &denc_s : nullptr);
      if (use_speech && ctc_weight > 0.0)
        model.ctc_head_backward(scache.out, dctc, *grads, denc_s);
      if (use_speech) model.encode_speech_backward(scache, denc_s, *grads);
      if (use_text) model.encode_text_backward(tcache, denc_t, *grads);
    }
  }
  return parts;
}

template LossParts compute_loss_and_grads<float>(const Model<float>&,
                                                 const std::vector<const EncodedItem*>&, double,
                                                 double, Parameters<float>*, DropoutCtx);
template LossParts compute_loss_and_grads<double>(const Model<double>&,
                                                  const std::vector<const EncodedItem*>&, double,
                                                  double, Parameters<double>*, DropoutCtx);
template std::vector<EncodedItem> encode_dataset_t<float>(const Dataset&, const Model<float>&);
template std::vector<EncodedItem> encode_dataset_t<double>(const Dataset&, const Model<double>&);

double evaluate_loss(const Model<float>& model, const std::vector<EncodedItem>& items,
                     double label_smoothing, double ctc_weight, size_t batch_size) {
  if (items.empty()) return 0.0;
  double total = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < items.size(); i += batch_size) {
    std::vector<const EncodedItem*> batch;
    for (size_t j = i; j < std::min(items.size(), i + batch_size); ++j) batch.push_back(&items[j]);
    LossParts p = compute_loss_and_grads<float>(model, batch, label_smoothing, ctc_weight, nullptr);
    total += p.total(ctc_weight) * static_cast<double>(batch.size());
    count += batch.size();
  }
  return total / static_cast<double>(count);
}

TrainResult train_model(Model<float>& model, TrainState& state, const Dataset& train,
                        const Dataset* valid, const TrainConfig& cfg, std::ostream* log,
                        const std::function<void(uint64_t, double)>& save_hook) {
  if (train.size() == 0) fail(Err::EmptyCorpus, "no training data");
  std::vector<EncodedItem> items = encode_dataset(train, model);
  std::vector<EncodedItem> valid_items;
  if (valid) valid_items = encode_dataset(*valid, model);

  // Textual multilingual training round-robins one mini-batch per language
  // with an update after each; other modes draw from a single mixed pool.
  std::map<std::string, std::vector<size_t>> pools;
  if (model.config().mode == ModelMode::Textual) {
    for (size_t i = 0; i < items.size(); ++i) pools[items[i].utt->target_language].push_back(i);
  } else {
    for (size_t i = 0; i < items.size(); ++i) pools[""].push_back(i);
  }

  struct Cursor {
    std::vector<size_t> order;
    size_t next = 0;
    uint64_t epoch = 0;
  };
  std::map<std::string, Cursor> cursors;
  for (auto& [langname, pool] : pools) cursors[langname].order = pool;

  auto reshuffle = [&](const std::string& langname, Cursor& cur) {
    Rng rng(Rng::derive(cfg.seed, Rng::hash_str(langname.data(), langname.size()) ^ cur.epoch));
    for (size_t k = 0; k + 1 < cur.order.size(); ++k) {
      size_t j = k + static_cast<size_t>(rng.next_below(cur.order.size() - k));
      std::swap(cur.order[k], cur.order[j]);
    }
    cur.next = 0;
    ++cur.epoch;
  };
  for (auto& [langname, cur] : cursors) reshuffle(langname, cur);

  Parameters<float> grads = model.zero_grads();
  Rng drop_rng(Rng::derive(cfg.seed, 0x9e01));
  DropoutCtx drop{model.config().dropout > 0.0 ? &drop_rng : nullptr, model.config().dropout};

  TrainResult result;
  double last_loss = 0.0;
  auto langs_it = cursors.begin();
  while (state.step < cfg.steps) {
    if (langs_it == cursors.end()) langs_it = cursors.begin();
    Cursor& cur = langs_it->second;
    std::vector<const EncodedItem*> batch;
    for (size_t b = 0; b < cfg.batch_size; ++b) {
      if (cur.next >= cur.order.size()) reshuffle(langs_it->first, cur);
      batch.push_back(&items[cur.order[cur.next++]]);
      if (cur.order.size() < cfg.batch_size && b + 1 == cur.order.size()) break;
    }
    ++langs_it;

    auto zero = [](Parameters<float>& g) {
      for (auto& [name, t] : named_tensors(g)) t->zero();
    };
    zero(grads);
    LossParts parts =
        compute_loss_and_grads(model, batch, cfg.label_smoothing, cfg.ctc_weight, &grads, drop);
    double loss = parts.total(cfg.ctc_weight);
    if (!std::isfinite(loss))
      fail(Err::NaNLoss, "non-finite loss at step " + std::to_string(state.step + 1) +
                             " (ce=" + std::to_string(parts.ce) +
                             ", ctc=" + std::to_string(parts.ctc) + ")");
    state.clip_norm = cfg.clip_norm;
    double lr = adam_step(model, state, grads);
    last_loss = loss;

    if (log && (state.step % cfg.log_every == 0 || state.step == cfg.steps)) {
      nlohmann::json j{{"step", state.step},
                       {"lr", lr},
                       {"loss", loss},
                       {"ce", parts.ce},
                       {"ctc_loss", parts.ctc}};
      (*log) << j.dump() << '\n';
    }
    if (save_hook && cfg.save_every > 0 && state.step % cfg.save_every == 0) {
      double vl = valid ? evaluate_loss(model, valid_items, cfg.label_smoothing, cfg.ctc_weight)
                        : last_loss;
      save_hook(state.step, vl);
    }
  }

  result.steps = state.step;
  result.last_loss = last_loss;
  result.val_loss = valid ? evaluate_loss(model, valid_items, cfg.label_smoothing, cfg.ctc_weight)
                          : last_loss;
  return result;
}

}  // namespace subseg
