#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace subseg {

// Minimal UTF-8 helpers. Invalid bytes are treated as one scalar each wide,
// so counting and iteration never fail on dirty input.

// Decodes the scalar starting at s[i]; advances i past it.
inline uint32_t utf8_next(std::string_view s, size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  uint32_t cp = c;
  size_t extra = 0;
  if (c >= 0xF0)
    extra = 3, cp = c & 0x07;
  else if (c >= 0xE0)
    extra = 2, cp = c & 0x0F;
  else if (c >= 0xC0)
    extra = 1, cp = c & 0x1F;
  ++i;
  for (size_t k = 0; k < extra; ++k) {
    if (i >= s.size() || (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) return cp;
    cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3F);
    ++i;
  }
  return cp;
}

inline size_t utf8_length(std::string_view s) {
  size_t n = 0, i = 0;
  while (i < s.size()) {
    utf8_next(s, i);
    ++n;
  }
  return n;
}

inline std::vector<uint32_t> utf8_decode(std::string_view s) {
  std::vector<uint32_t> out;
  size_t i = 0;
  while (i < s.size()) out.push_back(utf8_next(s, i));
  return out;
}

inline void utf8_append(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string utf8_encode(uint32_t cp) {
  std::string s;
  utf8_append(s, cp);
  return s;
}

// Last scalar of a non-empty string (0 on empty).
inline uint32_t utf8_last(std::string_view s) {
  uint32_t last = 0;
  size_t i = 0;
  while (i < s.size()) last = utf8_next(s, i);
  return last;
}

}  // namespace subseg
