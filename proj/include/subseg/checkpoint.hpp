#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "subseg/model.hpp"

namespace subseg {

// Character-trigram count profiles per language token; used to pick the
// zero-shot decoding prefix by lexical overlap.
using LangProfiles = std::map<std::string, std::map<std::string, double>>;

// Self-describing named-tensor container ("SBCK" v1): JSON header with the
// architecture, vocabulary, training step, validation loss and language
// profiles, followed by raw little-endian f32 tensors.
struct Checkpoint {
  ModelConfig config;
  uint64_t step = 0;
  double val_loss = 0.0;
  LangProfiles lang_profiles;
  std::shared_ptr<Model<float>> model;
};

void save_checkpoint(const std::string& path, const Model<float>& model, uint64_t step,
                     double val_loss, const LangProfiles& profiles);

Checkpoint load_checkpoint(const std::string& path);

// Elementwise mean of the parameter snapshots. Requires identical configs;
// exactly 7 checkpoints unless allow_any_count. The result replaces the
// parameters of a model built from the shared config and is returned as a
// Checkpoint carrying the last input's metadata.
Checkpoint average_checkpoints(const std::vector<std::string>& paths, bool allow_any_count = false);

}  // namespace subseg
