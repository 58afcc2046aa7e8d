#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "subseg/corpus.hpp"

namespace subseg {

// Timed subtitle block as stored in .srt files.
struct SrtCue {
  uint32_t index = 0;  // 1-based, strictly increasing within a file
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  std::vector<std::string> lines;  // 1..2 text lines
};

// Parses a whole SRT file. Tolerates a UTF-8 BOM and CRLF line endings.
// Throws MalformedTimestamp / NonMonotonicIndex / EmptyCue / TooManyLines
// with the 1-based line number.
std::vector<SrtCue> parse_srt(const std::string& bytes);

// Emits CRLF line endings and comma millisecond separators, bit-exact:
// parse_srt(emit_srt(cues)) == cues for normalized cues.
std::string emit_srt(const std::vector<SrtCue>& cues);

// Lines inside a cue joined with <eol>, every cue closed with <eob>.
// The result is a well-formed strict sentence.
SegmentedSentence srt_to_sentence(const std::vector<SrtCue>& cues);

}  // namespace subseg
