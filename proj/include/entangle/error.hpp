#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entangle {

enum class ErrorCode {
  invalid_input,
  parse_error,
  invariant_violation,
  duplicate_id,
  not_found,
  config_error,
  io_error,
  provider_unavailable,
  provider_timeout,
  provider_refusal,
  empty_narrative,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::invariant_violation: return "invariant_violation";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::provider_unavailable: return "provider_unavailable";
    case ErrorCode::provider_timeout: return "provider_timeout";
    case ErrorCode::provider_refusal: return "provider_refusal";
    case ErrorCode::empty_narrative: return "empty_narrative";
  }
  return "unknown";
}

/// Base exception for every failure raised by the engine. The code is
/// machine readable and drives CLI exit statuses and HTTP status mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Failure reported by an external provider after `attempts` tries.
class ProviderError : public Error {
 public:
  ProviderError(ErrorCode code, const std::string& message, int attempts = 1)
      : Error(code, message), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

inline bool is_provider_error(ErrorCode code) noexcept {
  return code == ErrorCode::provider_unavailable ||
         code == ErrorCode::provider_timeout ||
         code == ErrorCode::provider_refusal;
}

}  // namespace entangle
