#include "subseg/tok13a.hpp"

#include <cctype>

namespace subseg {

namespace {

// Stand-ins for protected break tokens. Control bytes pass every rule below
// untouched and never occur in corpus text.
constexpr char kEobMark = '\x01';
constexpr char kEolMark = '\x02';

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

// The mteval-13a "language-dependent" punctuation class:
// {-~  [-`  space-&  (-+  :-@  /
inline bool in_pad_class(unsigned char c) {
  return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
         (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == 0x2F;
}

// Emulates one re.sub pass of a two-character pattern: when pred(a, b) holds
// at a position, the match is replaced (non-overlapping, left to right).
template <class Pred, class Emit>
std::string sub2(const std::string& s, Pred pred, Emit emit) {
  std::string out;
  out.reserve(s.size() + 8);
  size_t i = 0;
  while (i < s.size()) {
    if (i + 1 < s.size() && pred(s[i], s[i + 1])) {
      emit(out, s[i], s[i + 1]);
      i += 2;
    } else {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize_13a(std::string_view text, bool protect_breaks) {
  std::string s(text);

  if (protect_breaks) {
    replace_all(s, "<eob>", std::string(1, kEobMark));
    replace_all(s, "<eol>", std::string(1, kEolMark));
  }

  // Language-independent normalization.
  replace_all(s, "<skipped>", "");
  replace_all(s, "-\n", "");
  replace_all(s, "\n", " ");
  if (s.find('&') != std::string::npos) {
    replace_all(s, "&quot;", "\"");
    replace_all(s, "&amp;", "&");
    replace_all(s, "&lt;", "<");
    replace_all(s, "&gt;", ">");
  }
  s = " " + s + " ";

  // Pad every character of the punctuation class with spaces.
  {
    std::string out;
    out.reserve(s.size() * 2);
    for (char c : s) {
      if (in_pad_class(static_cast<unsigned char>(c))) {
        out.push_back(' ');
        out.push_back(c);
        out.push_back(' ');
      } else {
        out.push_back(c);
      }
    }
    s = std::move(out);
  }

  // Tokenize period and comma unless preceded by a digit.
  s = sub2(
      s, [](char a, char b) { return !is_digit(a) && (b == '.' || b == ','); },
      [](std::string& out, char a, char b) {
        out.push_back(a);
        out.push_back(' ');
        out.push_back(b);
        out.push_back(' ');
      });
  // Tokenize period and comma unless followed by a digit.
  s = sub2(
      s, [](char a, char b) { return (a == '.' || a == ',') && !is_digit(b); },
      [](std::string& out, char a, char b) {
        out.push_back(' ');
        out.push_back(a);
        out.push_back(' ');
        out.push_back(b);
      });
  // Tokenize dash when preceded by a digit.
  s = sub2(
      s, [](char a, char b) { return is_digit(a) && b == '-'; },
      [](std::string& out, char a, char b) {
        out.push_back(a);
        out.push_back(' ');
        out.push_back(b);
        out.push_back(' ');
      });

  // Split on whitespace.
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.emplace_back(s.substr(start, i - start));
  }

  if (protect_breaks) {
    for (auto& t : tokens) {
      replace_all(t, std::string(1, kEobMark), "<eob>");
      replace_all(t, std::string(1, kEolMark), "<eol>");
    }
  }
  return tokens;
}

}  // namespace subseg
