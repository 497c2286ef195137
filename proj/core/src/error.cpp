#include "tailprobe/error.hpp"

namespace tailprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kEmptyTail: return "EmptyTail";
    case ErrorCode::kDomain: return "DomainError";
    case ErrorCode::kMissingLogprobs: return "MissingLogprobs";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kNoTransitions: return "NoTransitions";
    case ErrorCode::kCapability: return "CapabilityError";
    case ErrorCode::kAuth: return "AuthError";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kServer: return "ServerError";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kTransport: return "TransportError";
    case ErrorCode::kWindowTooShort: return "WindowTooShort";
    case ErrorCode::kOneClassOnly: return "OneClassOnly";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonPositiveKl: return "NonPositiveKL";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

bool Error::is_backend_error() const noexcept {
  switch (code_) {
    case ErrorCode::kNoTransitions:
    case ErrorCode::kAuth:
    case ErrorCode::kRateLimited:
    case ErrorCode::kServer:
    case ErrorCode::kMalformedResponse:
    case ErrorCode::kTimeout:
    case ErrorCode::kTransport:
      return true;
    default:
      return false;
  }
}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + message), line_(line) {}

RemoteError::RemoteError(ErrorCode code, int attempts, int http_status, const std::string& message)
    : Error(code, message + " (after " + std::to_string(attempts) + " attempt" +
                      (attempts == 1 ? "" : "s") + ")"),
      attempts_(attempts),
      http_status_(http_status) {}

}  // namespace tailprobe
