#include "subseg/error.hpp"

namespace subseg {

const char* err_name(Err code) {
  switch (code) {
    case Err::AdjacentBreaks: return "AdjacentBreaks";
    case Err::LeadingBreak: return "LeadingBreak";
    case Err::MissingFinalEob: return "MissingFinalEob";
    case Err::MalformedTimestamp: return "MalformedTimestamp";
    case Err::NonMonotonicIndex: return "NonMonotonicIndex";
    case Err::EmptyCue: return "EmptyCue";
    case Err::TooManyLines: return "TooManyLines";
    case Err::BadMagic: return "BadMagic";
    case Err::SizeMismatch: return "SizeMismatch";
    case Err::NonFiniteValue: return "NonFiniteValue";
    case Err::WordExceedsLimit: return "WordExceedsLimit";
    case Err::EmptyInput: return "EmptyInput";
    case Err::EmptyCorpus: return "EmptyCorpus";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::ZeroUpperBound: return "ZeroUpperBound";
    case Err::ZeroReferenceBreaks: return "ZeroReferenceBreaks";
    case Err::ModeMismatch: return "ModeMismatch";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::TargetTooLong: return "TargetTooLong";
    case Err::NaNLoss: return "NaNLoss";
    case Err::UnknownLanguageToken: return "UnknownLanguageToken";
    case Err::UnknownToken: return "UnknownToken";
    case Err::ConfigMismatch: return "ConfigMismatch";
    case Err::WrongCount: return "WrongCount";
    case Err::FeatureCountMismatch: return "FeatureCountMismatch";
    case Err::CountMismatch: return "CountMismatch";
    case Err::MalformedTarget: return "MalformedTarget";
    case Err::BadFormat: return "BadFormat";
    case Err::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace subseg
