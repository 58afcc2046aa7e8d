#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace subseg {

enum class Err {
  // corpus / parsing
  AdjacentBreaks,
  LeadingBreak,
  MissingFinalEob,
  MalformedTimestamp,
  NonMonotonicIndex,
  EmptyCue,
  TooManyLines,
  BadMagic,
  SizeMismatch,
  NonFiniteValue,
  // rulebased
  WordExceedsLimit,
  EmptyInput,
  // metrics
  EmptyCorpus,
  LengthMismatch,
  ZeroUpperBound,
  ZeroReferenceBreaks,
  // neural
  ModeMismatch,
  ShapeMismatch,
  TargetTooLong,
  NaNLoss,
  UnknownLanguageToken,
  UnknownToken,
  ConfigMismatch,
  WrongCount,
  // synth / dataset
  FeatureCountMismatch,
  CountMismatch,
  MalformedTarget,
  // generic
  BadFormat,
  IoError,
};

const char* err_name(Err code);

// Carries a typed code plus an optional position (token index, line number,
// sentence index -- whatever the operation reports positions in).
class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg)
      : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}
  Error(Err code, const std::string& msg, size_t pos)
      : std::runtime_error(std::string(err_name(code)) + ": " + msg + " (at " +
                           std::to_string(pos) + ")"),
        code_(code),
        pos_(pos) {}

  Err code() const { return code_; }
  std::optional<size_t> pos() const { return pos_; }

 private:
  Err code_;
  std::optional<size_t> pos_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) { throw Error(code, msg); }
[[noreturn]] inline void fail(Err code, const std::string& msg, size_t pos) {
  throw Error(code, msg, pos);
}

}  // namespace subseg
