#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subseg/checkpoint.hpp"
#include "subseg/corpus.hpp"
#include "subseg/dataset.hpp"
#include "subseg/features.hpp"
#include "subseg/rulebased.hpp"

namespace subseg {

// Configuration of the ST-corpus -> SubST-corpus conversion step and of the
// synthetic speech generator used for controlled experiments.
struct SynthConfig {
  enum class Segmenter { CountChars, Neural };
  Segmenter segmenter = Segmenter::CountChars;
  CountCharsConfig count_chars;
  std::string checkpoint_path;  // neural segmenter weights
  std::string language_token;   // empty or "auto": pick by trigram overlap
  size_t beam_size = 5;
  size_t max_len = 640;

  // Synthetic speech shape: voiced spans per word, near-silent pauses at
  // breaks (<eol> gets half a pause, rounded up).
  size_t pause_frames = 8;
  size_t feature_dims = 16;
  size_t frames_per_char = 6;
  size_t word_pad_frames = 2;
  uint32_t frame_shift_ms = 10;

  uint64_t seed = 0;
  unsigned threads = 1;
};

// Voiced spans for words (uniform in [-1,1], mean |x| well above the pause
// level) and near-zero pauses at break positions, deterministic in the rng.
FeatureMatrix generate_synthetic_speech(const SegmentedSentence& sentence, const SynthConfig& cfg,
                                        Rng& rng);

// Sentence i uses Rng::derive(cfg.seed, i).
std::vector<FeatureMatrix> generate_synthetic_speech_corpus(const Corpus& c,
                                                            const SynthConfig& cfg);

// Character-trigram profiles of the target text per language token.
LangProfiles build_lang_profiles(const Dataset& ds, size_t max_entries = 4096);

// Highest cosine overlap between the corpus trigrams and the profiles;
// deterministic tie-break on the token string.
std::string pick_language_token(const Corpus& input, const LangProfiles& profiles);

// Repairs raw model output into a well-formed strict sentence: leading and
// doubled breaks dropped, third lines promoted to new blocks, final <eob>
// enforced. Returns an empty sentence when no words survive.
SegmentedSentence normalize_strict(const SegmentedSentence& raw);

// Runs the configured segmenter over every sentence, zero-shot. Sentence
// count and order are preserved; sentences the segmenter fails on fall back
// to the degenerate single-<eob> segmentation (logged to stderr).
Corpus segment_corpus(const Corpus& unsegmented, const std::vector<FeatureMatrix>* features,
                      const SynthConfig& cfg);

// Same with an already-loaded model (spares repeated checkpoint reads).
Corpus segment_corpus_with_model(const Corpus& unsegmented,
                                 const std::vector<FeatureMatrix>* features,
                                 const Model<float>& model, const LangProfiles& profiles,
                                 const SynthConfig& cfg);

}  // namespace subseg
