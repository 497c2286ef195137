#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tailprobe {

enum class ErrorCode {
  kInvalidArgument,
  kTooShort,
  kEmptyTail,
  kDomain,
  kMissingLogprobs,
  kEmptyCorpus,
  kNoTransitions,
  kCapability,
  kAuth,
  kRateLimited,
  kServer,
  kMalformedResponse,
  kTimeout,
  kTransport,
  kWindowTooShort,
  kOneClassOnly,
  kEmptyInput,
  kNonPositiveKl,
  kParse,
  kDuplicateId,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  // True for failures that originate in a generation backend.
  bool is_backend_error() const noexcept;

 private:
  ErrorCode code_;
};

// Malformed input file; line is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Remote request failure after `attempts` tries.
class RemoteError : public Error {
 public:
  RemoteError(ErrorCode code, int attempts, int http_status, const std::string& message);
  int attempts() const noexcept { return attempts_; }
  int http_status() const noexcept { return http_status_; }

 private:
  int attempts_;
  int http_status_;
};

}  // namespace tailprobe
