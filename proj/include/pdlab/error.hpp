#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdlab {

enum class Errc {
  ParseError,
  DuplicateLabel,
  BadCardinality,
  BadLabel,
  UnknownFormat,
  EvenPatternLength,
  LaneMismatch,
  BadRollOff,
  SpectrumMismatch,
  ZeroSignal,
  LevelQuantizationError,
  AlignmentError,
  FrameMismatch,
  BadNoiseVariance,
  MissingPoint,
  InvalidArgument,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::BadCardinality: return "BadCardinality";
    case Errc::BadLabel: return "BadLabel";
    case Errc::UnknownFormat: return "UnknownFormat";
    case Errc::EvenPatternLength: return "EvenPatternLength";
    case Errc::LaneMismatch: return "LaneMismatch";
    case Errc::BadRollOff: return "BadRollOff";
    case Errc::SpectrumMismatch: return "SpectrumMismatch";
    case Errc::ZeroSignal: return "ZeroSignal";
    case Errc::LevelQuantizationError: return "LevelQuantizationError";
    case Errc::AlignmentError: return "AlignmentError";
    case Errc::FrameMismatch: return "FrameMismatch";
    case Errc::BadNoiseVariance: return "BadNoiseVariance";
    case Errc::MissingPoint: return "MissingPoint";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace pdlab
