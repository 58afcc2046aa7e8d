#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "subseg/corpus.hpp"

namespace subseg {

// Reserved token literals. The model vocabulary is consumed as a plain token
// list; these entries must all be present.
inline constexpr std::string_view kPadTok = "<pad>";
inline constexpr std::string_view kBosTok = "<s>";
inline constexpr std::string_view kEosTok = "</s>";
inline constexpr std::string_view kBlankTok = "<blank>";
inline constexpr std::string_view kSpaceTok = "▁";  // word separator symbol

std::string lang_token(std::string_view language);  // "es" -> "<lang:es>"
bool is_lang_token(std::string_view token);

// Character-level vocabulary with reserved specials and break tokens.
struct Vocab {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;
  int pad = -1, bos = -1, eos = -1, blank = -1, eol = -1, eob = -1;

  static Vocab from_tokens(std::vector<std::string> tokens);

  size_t size() const { return tokens.size(); }
  int find(std::string_view t) const;           // -1 when absent
  int id(std::string_view t) const;             // throws UnknownToken
  const std::string& token(int id) const { return tokens[static_cast<size_t>(id)]; }

  // Words joined by the separator symbol, one id per Unicode scalar.
  std::vector<int> encode_words(const std::vector<std::string>& words) const;
  // Same, with break tokens mapped to their ids.
  std::vector<int> encode_sentence(const SegmentedSentence& s) const;
  // Inverse of encode_sentence; specials and language tokens are skipped,
  // no well-formedness is enforced (model output may be dirty).
  SegmentedSentence decode_sentence(const std::vector<int>& ids) const;
};

// Canonical vocabulary for a set of corpora: reserved specials, sorted
// language tokens, then every character seen in the text.
Vocab build_char_vocab(const std::vector<const Corpus*>& corpora,
                       const std::vector<std::string>& languages);

std::vector<std::string> read_token_list(const std::string& path);
void write_token_list(const std::string& path, const std::vector<std::string>& tokens);

}  // namespace subseg
