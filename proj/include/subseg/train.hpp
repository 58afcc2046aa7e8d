#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "subseg/dataset.hpp"
#include "subseg/model.hpp"
#include "subseg/optim.hpp"

namespace subseg {

struct TrainConfig {
  size_t batch_size = 8;
  uint64_t steps = 1000;
  double base_lr = 1e-3;
  uint64_t warmup = 4000;
  double label_smoothing = 0.1;
  double ctc_weight = 0.5;
  double clip_norm = 0.0;
  uint64_t seed = 1;
  size_t save_every = 0;  // 0: only the final checkpoint
  size_t log_every = 10;
};

// Declarative key=value config file ('#' comments); unknown keys are errors.
TrainConfig read_train_config(const std::string& path);
void apply_train_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);

// Utterance with precomputed id sequences for one model/vocabulary.
struct EncodedItem {
  const Utterance* utt = nullptr;
  std::vector<int> src_ids;  // empty in speech-only mode
  std::vector<int> tgt_ids;  // language prefix (speech modes) + sentence
  std::vector<int> ctc_ids;  // transcript supervision for the speech encoder
};

std::vector<EncodedItem> encode_dataset(const Dataset& ds, const Model<float>& model);
template <class T>
std::vector<EncodedItem> encode_dataset_t(const Dataset& ds, const Model<T>& model);

struct LossParts {
  double ce = 0.0;
  double ctc = 0.0;  // mean per-token CTC, before the lambda weight
  size_t tokens = 0;
  double total(double ctc_weight) const { return ce + ctc_weight * ctc; }
};

// Label-smoothed cross-entropy (+ weighted CTC in speech modes) over one
// batch, averaged per target token; gradients accumulate into *grads when
// given. Deterministic item order; dropout only when drop.rng is set.
template <class T>
LossParts compute_loss_and_grads(const Model<T>& model, const std::vector<const EncodedItem*>& batch,
                                 double label_smoothing, double ctc_weight, Parameters<T>* grads,
                                 DropoutCtx drop = {});

// Mean loss over a dataset without gradient accumulation.
double evaluate_loss(const Model<float>& model, const std::vector<EncodedItem>& items,
                     double label_smoothing, double ctc_weight, size_t batch_size = 16);

struct TrainResult {
  uint64_t steps = 0;
  double last_loss = 0.0;
  double val_loss = 0.0;
};

// Runs the full loop: shuffled batches (textual multilingual data is
// round-robined per language with one update per language mini-batch),
// Adam with the inverse-sqrt schedule, line-delimited JSON logging, and an
// optional save hook every cfg.save_every steps.
TrainResult train_model(Model<float>& model, TrainState& state, const Dataset& train,
                        const Dataset* valid, const TrainConfig& cfg, std::ostream* log,
                        const std::function<void(uint64_t, double)>& save_hook = {});

}  // namespace subseg
