#include "subseg/srt.hpp"

#include <charconv>
#include <cstdio>

namespace subseg {

namespace {

// Splits into lines on \n, dropping a trailing \r from each.
std::vector<std::string> split_physical_lines(std::string_view bytes) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos <= bytes.size()) {
    size_t nl = bytes.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? bytes.substr(pos) : bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  // A final newline produces one empty trailing entry; keep it, the cue
  // scanner treats blank lines as separators anyway.
  return lines;
}

bool parse_u64(std::string_view s, uint64_t& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// "HH:MM:SS,mmm" with two-or-more hour digits.
bool parse_time(std::string_view s, int64_t& ms) {
  size_t c1 = s.find(':');
  if (c1 == std::string_view::npos || c1 < 2) return false;
  size_t c2 = s.find(':', c1 + 1);
  if (c2 == std::string_view::npos || c2 != c1 + 3) return false;
  size_t comma = s.find(',', c2 + 1);
  if (comma == std::string_view::npos || comma != c2 + 3) return false;
  if (s.size() != comma + 4) return false;
  uint64_t h, m, sec, milli;
  if (!parse_u64(s.substr(0, c1), h) || !parse_u64(s.substr(c1 + 1, 2), m) ||
      !parse_u64(s.substr(c2 + 1, 2), sec) || !parse_u64(s.substr(comma + 1, 3), milli))
    return false;
  if (m >= 60 || sec >= 60) return false;
  ms = static_cast<int64_t>(((h * 60 + m) * 60 + sec) * 1000 + milli);
  return true;
}

void format_time(std::string& out, int64_t ms) {
  char buf[32];
  int64_t h = ms / 3600000, m = (ms / 60000) % 60, s = (ms / 1000) % 60, milli = ms % 1000;
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld,%03lld", static_cast<long long>(h),
                static_cast<long long>(m), static_cast<long long>(s),
                static_cast<long long>(milli));
  out.append(buf);
}

}  // namespace

std::vector<SrtCue> parse_srt(const std::string& bytes) {
  std::string_view body = bytes;
  if (body.size() >= 3 && static_cast<unsigned char>(body[0]) == 0xEF &&
      static_cast<unsigned char>(body[1]) == 0xBB && static_cast<unsigned char>(body[2]) == 0xBF)
    body.remove_prefix(3);

  std::vector<std::string> lines = split_physical_lines(body);
  std::vector<SrtCue> cues;
  uint32_t prev_index = 0;
  size_t i = 0;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    size_t index_lineno = i + 1;
    uint64_t index;
    if (!parse_u64(lines[i], index))
      fail(Err::BadFormat, "expected cue index, got \"" + lines[i] + "\"", index_lineno);
    if (index <= prev_index)
      fail(Err::NonMonotonicIndex,
           "cue index " + std::to_string(index) + " not greater than " +
               std::to_string(prev_index),
           index_lineno);
    ++i;
    if (i >= lines.size())
      fail(Err::MalformedTimestamp, "missing timing line", index_lineno);
    const std::string& timing = lines[i];
    size_t lineno = i + 1;
    size_t arrow = timing.find(" --> ");
    int64_t start, end;
    if (arrow == std::string::npos || !parse_time(std::string_view(timing).substr(0, arrow), start) ||
        !parse_time(std::string_view(timing).substr(arrow + 5), end))
      fail(Err::MalformedTimestamp, "bad timing line \"" + timing + "\"", lineno);
    if (start >= end)
      fail(Err::MalformedTimestamp,
           "cue interval is empty or reversed (" + timing + ")", lineno);
    ++i;
    SrtCue cue;
    cue.index = static_cast<uint32_t>(index);
    cue.start_ms = start;
    cue.end_ms = end;
    while (i < lines.size() && !lines[i].empty()) {
      if (cue.lines.size() == 2)
        fail(Err::TooManyLines, "cue has more than two text lines", i + 1);
      cue.lines.push_back(lines[i]);
      ++i;
    }
    if (cue.lines.empty()) fail(Err::EmptyCue, "cue has no text lines", lineno);
    prev_index = cue.index;
    cues.push_back(std::move(cue));
  }
  return cues;
}

std::string emit_srt(const std::vector<SrtCue>& cues) {
  std::string out;
  for (const auto& cue : cues) {
    out.append(std::to_string(cue.index));
    out.append("\r\n");
    format_time(out, cue.start_ms);
    out.append(" --> ");
    format_time(out, cue.end_ms);
    out.append("\r\n");
    for (const auto& line : cue.lines) {
      out.append(line);
      out.append("\r\n");
    }
    out.append("\r\n");
  }
  return out;
}

SegmentedSentence srt_to_sentence(const std::vector<SrtCue>& cues) {
  if (cues.empty()) fail(Err::EmptyCue, "no cues to convert");
  SegmentedSentence s;
  for (const auto& cue : cues) {
    if (cue.lines.empty()) fail(Err::EmptyCue, "cue " + std::to_string(cue.index) + " is empty");
    for (size_t li = 0; li < cue.lines.size(); ++li) {
      if (li) s.tokens.push_back(Token::eol());
      SegmentedSentence words = parse_segmented(cue.lines[li], ParseMode::Lenient);
      for (auto& t : words.tokens) {
        if (t.is_break())
          fail(Err::BadFormat,
               "cue " + std::to_string(cue.index) + " contains a literal break token");
        s.tokens.push_back(std::move(t));
      }
    }
    s.tokens.push_back(Token::eob());
  }
  validate_sentence(s, ParseMode::Strict);
  return s;
}

}  // namespace subseg
