#include "subseg/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace subseg {

Dataset read_manifest(const std::string& path, bool load_features) {
  std::ifstream in(path);
  if (!in) fail(Err::IoError, "cannot open " + path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();

  Dataset ds;
  std::unordered_set<std::string> seen;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(Err::BadFormat, "manifest line " + std::to_string(lineno) + ": " + e.what(), lineno);
    }
    Utterance u;
    u.id = j.at("id").get<std::string>();
    if (!seen.insert(u.id).second)
      fail(Err::BadFormat, "duplicate utterance id \"" + u.id + "\"", lineno);
    u.feature_file = j.value("feature_file", std::string());
    u.target_language = j.value("target_language", std::string());
    std::string source = j.at("source").get<std::string>();
    u.source_words = strip_breaks(parse_segmented(source, ParseMode::Lenient));
    std::string target = j.at("target").get<std::string>();
    try {
      u.target = parse_segmented(target, ParseMode::Strict);
    } catch (const Error& e) {
      fail(Err::MalformedTarget, "utterance \"" + u.id + "\": " + e.what(), lineno);
    }
    if (u.target.empty()) fail(Err::MalformedTarget, "utterance \"" + u.id + "\" has empty target");
    if (load_features && !u.feature_file.empty()) {
      std::filesystem::path f(u.feature_file);
      if (f.is_relative()) f = base / f;
      u.features = read_features_file(f.string());
    }
    ds.items.push_back(std::move(u));
  }
  return ds;
}

void write_manifest(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open " + path + " for writing");
  for (const auto& u : ds.items) {
    std::string source;
    for (size_t w = 0; w < u.source_words.size(); ++w) {
      if (w) source.push_back(' ');
      source += u.source_words[w];
    }
    nlohmann::json j{{"id", u.id},
                     {"feature_file", u.feature_file},
                     {"source", source},
                     {"target", serialize_segmented(u.target)},
                     {"target_language", u.target_language}};
    out << j.dump() << '\n';
  }
  if (!out) fail(Err::IoError, "write failed: " + path);
}

Dataset build_subst_dataset(const Corpus& unsegmented, const std::vector<FeatureMatrix>& features,
                            const Corpus& segmented,
                            const std::vector<std::string>& feature_files) {
  if (unsegmented.size() != segmented.size() || unsegmented.size() != features.size())
    fail(Err::CountMismatch, "aligned inputs differ: " + std::to_string(unsegmented.size()) +
                                 " sources, " + std::to_string(features.size()) + " feature sets, " +
                                 std::to_string(segmented.size()) + " targets");
  if (!feature_files.empty() && feature_files.size() != features.size())
    fail(Err::CountMismatch, "feature file list not aligned");

  Dataset ds;
  for (size_t i = 0; i < unsegmented.size(); ++i) {
    Utterance u;
    char buf[32];
    std::snprintf(buf, sizeof buf, "utt_%06zu", i);
    u.id = buf;
    u.feature_file = feature_files.empty() ? std::string() : feature_files[i];
    u.features = features[i];
    u.source_words = strip_breaks(unsegmented.sentences[i]);
    u.target = segmented.sentences[i];
    u.target_language = segmented.language.empty() ? unsegmented.language : segmented.language;
    try {
      validate_sentence(u.target, ParseMode::Strict);
    } catch (const Error& e) {
      fail(Err::MalformedTarget, "utterance \"" + u.id + "\": " + e.what(), i);
    }
    if (u.target.empty()) fail(Err::MalformedTarget, "utterance \"" + u.id + "\" has empty target", i);
    ds.items.push_back(std::move(u));
  }
  return ds;
}

}  // namespace subseg
