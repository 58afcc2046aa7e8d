#include "subseg/corpus.hpp"

#include <fstream>
#include <sstream>

#include "subseg/utf8.hpp"

namespace subseg {

size_t SegmentedSentence::count_breaks() const {
  size_t n = 0;
  for (const auto& t : tokens) n += t.is_break();
  return n;
}

size_t SegmentedSentence::count_eol() const {
  size_t n = 0;
  for (const auto& t : tokens) n += t.is_eol();
  return n;
}

size_t SegmentedSentence::count_eob() const {
  size_t n = 0;
  for (const auto& t : tokens) n += t.is_eob();
  return n;
}

size_t SegmentedSentence::count_words() const {
  size_t n = 0;
  for (const auto& t : tokens) n += !t.is_break();
  return n;
}

void validate_sentence(const SegmentedSentence& s, ParseMode mode) {
  for (size_t i = 0; i < s.tokens.size(); ++i) {
    if (!s.tokens[i].is_break()) continue;
    if (i == 0) fail(Err::LeadingBreak, "sentence starts with a break token", 0);
    if (s.tokens[i - 1].is_break())
      fail(Err::AdjacentBreaks, "two adjacent break tokens", i);
  }
  if (mode == ParseMode::Strict) {
    if (s.tokens.empty() || !s.tokens.back().is_eob())
      fail(Err::MissingFinalEob, "strict sentence must end in " + std::string(kEobLit),
           s.tokens.empty() ? 0 : s.tokens.size() - 1);
    // A block has at most two lines: an <eol>-terminated line is never
    // followed by another <eol> before the block closes.
    bool open_eol = false;
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      const Token& t = s.tokens[i];
      if (t.is_eol()) {
        if (open_eol)
          fail(Err::TooManyLines, "block with more than two lines (consecutive <eol> lines)", i);
        open_eol = true;
      } else if (t.is_eob()) {
        open_eol = false;
      }
    }
  }
}

SegmentedSentence parse_segmented(std::string_view line, ParseMode mode) {
  SegmentedSentence s;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i == start) break;
    std::string_view tok = line.substr(start, i - start);
    if (tok == kEolLit)
      s.tokens.push_back(Token::eol());
    else if (tok == kEobLit)
      s.tokens.push_back(Token::eob());
    else
      s.tokens.push_back(Token::word(std::string(tok)));
  }
  validate_sentence(s, mode);
  return s;
}

std::string serialize_segmented(const SegmentedSentence& s) {
  std::string out;
  for (size_t i = 0; i < s.tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out.append(s.tokens[i].str());
  }
  return out;
}

std::vector<std::string> strip_breaks(const SegmentedSentence& s) {
  std::vector<std::string> words;
  for (const auto& t : s.tokens)
    if (!t.is_break()) words.push_back(t.text);
  return words;
}

SegmentedSentence strip_breaks_sentence(const SegmentedSentence& s) {
  SegmentedSentence out;
  for (const auto& t : s.tokens)
    if (!t.is_break()) out.tokens.push_back(t);
  return out;
}

std::vector<std::string> split_lines(const SegmentedSentence& s) {
  std::vector<std::string> lines;
  std::string cur;
  bool in_span = false;
  for (const auto& t : s.tokens) {
    if (t.is_break()) {
      lines.push_back(cur);
      cur.clear();
      in_span = false;
    } else {
      if (in_span) cur.push_back(' ');
      cur.append(t.text);
      in_span = true;
    }
  }
  if (in_span) lines.push_back(cur);  // trailing span without a final break
  return lines;
}

std::vector<size_t> line_lengths(const SegmentedSentence& s) {
  std::vector<size_t> out;
  for (const auto& line : split_lines(s)) out.push_back(utf8_length(line));
  return out;
}

Corpus read_corpus(std::istream& in, ParseMode mode, std::string language, std::string name) {
  Corpus c;
  c.language = std::move(language);
  c.name = std::move(name);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      c.sentences.push_back(parse_segmented(line, mode));
    } catch (const Error& e) {
      fail(e.code(), std::string(e.what()) + " on line " + std::to_string(lineno), lineno);
    }
  }
  return c;
}

Corpus read_corpus_file(const std::string& path, ParseMode mode, std::string language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path);
  return read_corpus(in, mode, std::move(language), path);
}

void write_corpus(std::ostream& out, const Corpus& c) {
  for (const auto& s : c.sentences) out << serialize_segmented(s) << '\n';
}

void write_corpus_file(const std::string& path, const Corpus& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot open " + path + " for writing");
  write_corpus(out, c);
  if (!out) fail(Err::IoError, "write failed: " + path);
}

}  // namespace subseg
