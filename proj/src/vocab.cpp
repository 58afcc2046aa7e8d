#include "subseg/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "subseg/error.hpp"
#include "subseg/utf8.hpp"

namespace subseg {

std::string lang_token(std::string_view language) {
  return "<lang:" + std::string(language) + ">";
}

bool is_lang_token(std::string_view token) {
  return token.size() > 7 && token.substr(0, 6) == "<lang:" && token.back() == '>';
}

Vocab Vocab::from_tokens(std::vector<std::string> toks) {
  Vocab v;
  v.tokens = std::move(toks);
  for (size_t i = 0; i < v.tokens.size(); ++i) {
    auto [it, inserted] = v.index.emplace(v.tokens[i], static_cast<int>(i));
    if (!inserted) fail(Err::BadFormat, "duplicate vocabulary token \"" + v.tokens[i] + "\"");
  }
  v.pad = v.find(kPadTok);
  v.bos = v.find(kBosTok);
  v.eos = v.find(kEosTok);
  v.blank = v.find(kBlankTok);
  v.eol = v.find(kEolLit);
  v.eob = v.find(kEobLit);
  if (v.pad < 0 || v.bos < 0 || v.eos < 0 || v.blank < 0 || v.eol < 0 || v.eob < 0)
    fail(Err::BadFormat, "vocabulary is missing a reserved token");
  return v;
}

int Vocab::find(std::string_view t) const {
  auto it = index.find(std::string(t));
  return it == index.end() ? -1 : it->second;
}

int Vocab::id(std::string_view t) const {
  int i = find(t);
  if (i < 0) fail(Err::UnknownToken, "token \"" + std::string(t) + "\" not in vocabulary");
  return i;
}

std::vector<int> Vocab::encode_words(const std::vector<std::string>& words) const {
  std::vector<int> ids;
  for (size_t w = 0; w < words.size(); ++w) {
    if (w) ids.push_back(id(kSpaceTok));
    for (uint32_t cp : utf8_decode(words[w])) ids.push_back(id(utf8_encode(cp)));
  }
  return ids;
}

std::vector<int> Vocab::encode_sentence(const SegmentedSentence& s) const {
  std::vector<int> ids;
  bool word_before = false;
  for (const auto& t : s.tokens) {
    if (t.is_break()) {
      ids.push_back(t.is_eol() ? eol : eob);
      word_before = false;
    } else {
      if (word_before) ids.push_back(id(kSpaceTok));
      for (uint32_t cp : utf8_decode(t.text)) ids.push_back(id(utf8_encode(cp)));
      word_before = true;
    }
  }
  return ids;
}

SegmentedSentence Vocab::decode_sentence(const std::vector<int>& ids) const {
  SegmentedSentence out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.tokens.push_back(Token::word(word));
      word.clear();
    }
  };
  for (int id : ids) {
    if (id < 0 || static_cast<size_t>(id) >= tokens.size()) continue;
    if (id == eos) break;
    if (id == pad || id == bos || id == blank) continue;
    const std::string& tok = tokens[static_cast<size_t>(id)];
    if (is_lang_token(tok)) continue;
    if (id == eol || id == eob) {
      flush();
      out.tokens.push_back(id == eol ? Token::eol() : Token::eob());
    } else if (tok == kSpaceTok) {
      flush();
    } else {
      word += tok;
    }
  }
  flush();
  return out;
}

Vocab build_char_vocab(const std::vector<const Corpus*>& corpora,
                       const std::vector<std::string>& languages) {
  std::set<std::string> chars;
  for (const Corpus* c : corpora)
    for (const auto& s : c->sentences)
      for (const auto& t : s.tokens)
        if (!t.is_break())
          for (uint32_t cp : utf8_decode(t.text)) chars.insert(utf8_encode(cp));

  std::vector<std::string> toks{std::string(kPadTok), std::string(kBosTok), std::string(kEosTok),
                                std::string(kBlankTok), std::string(kEolLit),
                                std::string(kEobLit)};
  std::set<std::string> langs(languages.begin(), languages.end());
  for (const auto& l : langs) toks.push_back(lang_token(l));
  toks.push_back(std::string(kSpaceTok));
  for (const auto& ch : chars) toks.push_back(ch);
  return Vocab::from_tokens(std::move(toks));
}

std::vector<std::string> read_token_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoError, "cannot open " + path);
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) toks.push_back(line);
  }
  return toks;
}

void write_token_list(const std::string& path, const std::vector<std::string>& tokens) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open " + path + " for writing");
  for (const auto& t : tokens) out << t << '\n';
}

}  // namespace subseg
