#pragma once

#include <stdexcept>
#include <string>

namespace mixaug {

/// Failure classes. Each maps onto one CLI exit code.
enum class ErrorCategory { config, data, numeric };

enum class ErrorCode {
  // configuration / argument problems
  invalid_argument,
  unknown_key,
  config_conflict,
  // file and dataset problems
  io,
  wav_malformed_header,
  wav_unsupported_encoding,
  wav_truncated_data,
  missing_stem,
  length_mismatch,
  rate_mismatch,
  out_of_range,
  no_eligible_songs,
  stale_spec,
  empty_input,
  missing_ground_truth,
  // numerical trouble
  degenerate_signal,
  numeric,
};

inline ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::unknown_key:
    case ErrorCode::config_conflict:
      return ErrorCategory::config;
    case ErrorCode::degenerate_signal:
    case ErrorCode::numeric:
      return ErrorCategory::numeric;
    default:
      return ErrorCategory::data;
  }
}

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::unknown_key: return "unknown config key";
    case ErrorCode::config_conflict: return "config conflict";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::wav_malformed_header: return "malformed RIFF header";
    case ErrorCode::wav_unsupported_encoding: return "unsupported encoding";
    case ErrorCode::wav_truncated_data: return "truncated data chunk";
    case ErrorCode::missing_stem: return "missing stem";
    case ErrorCode::length_mismatch: return "length mismatch";
    case ErrorCode::rate_mismatch: return "sample-rate mismatch";
    case ErrorCode::out_of_range: return "out of range";
    case ErrorCode::no_eligible_songs: return "no eligible songs";
    case ErrorCode::stale_spec: return "stale mix spec";
    case ErrorCode::empty_input: return "empty input";
    case ErrorCode::missing_ground_truth: return "missing ground truth";
    case ErrorCode::degenerate_signal: return "degenerate signal";
    case ErrorCode::numeric: return "numeric failure";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace mixaug
