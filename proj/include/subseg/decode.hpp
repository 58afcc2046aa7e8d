#pragma once

#include <functional>
#include <string>
#include <vector>

#include "subseg/model.hpp"

namespace subseg {

struct BeamConfig {
  size_t beam_size = 5;
  size_t max_len = 512;  // generated tokens, eos included
};

// Log-probabilities over the vocabulary for the next position given the full
// prefix (forced prefix + generated so far).
using StepScorer = std::function<std::vector<float>(const std::vector<int>& prefix)>;

// Length-normalized beam search. Returns generated ids without eos.
// beam_size 1 is exactly a greedy argmax loop. Ties break deterministically
// (higher score, then lower token id).
std::vector<int> beam_search(const StepScorer& score_step, const std::vector<int>& forced_prefix,
                             int eos_id, size_t vocab_size, const BeamConfig& cfg);

// Runs the model decoder as the scorer. Decoding starts from bos (textual)
// or bos + language token (multimodal / speech-only).
std::vector<int> beam_decode(const Model<float>& model, const FeatureMatrix* speech,
                             const std::vector<int>* src_ids, const std::string& language_token,
                             const BeamConfig& cfg);

}  // namespace subseg
