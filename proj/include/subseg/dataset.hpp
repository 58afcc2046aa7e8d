#pragma once

#include <optional>
#include <string>
#include <vector>

#include "subseg/corpus.hpp"
#include "subseg/features.hpp"

namespace subseg {

// One training/decoding example: audio features paired with the source
// transcript and the break-annotated target.
struct Utterance {
  std::string id;
  std::string feature_file;  // empty for text-only data
  std::optional<FeatureMatrix> features;
  std::vector<std::string> source_words;  // unsegmented transcript
  SegmentedSentence target;               // well-formed strict
  std::string target_language;
};

struct Dataset {
  std::vector<Utterance> items;
  size_t size() const { return items.size(); }
};

// Line-delimited JSON records {id, feature_file, source, target,
// target_language}; feature files are SPFT, resolved against the manifest's
// directory. Validates id uniqueness and target well-formedness.
Dataset read_manifest(const std::string& path, bool load_features);
void write_manifest(const std::string& path, const Dataset& ds);

// Zips aligned unsegmented sources, features and segmented targets into
// training-ready utterances. feature_files may be empty (in-memory data) but
// when given must align one-to-one.
Dataset build_subst_dataset(const Corpus& unsegmented, const std::vector<FeatureMatrix>& features,
                            const Corpus& segmented,
                            const std::vector<std::string>& feature_files = {});

}  // namespace subseg
