#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tailprobe/generation.hpp"

namespace tailprobe {

/// Request body for POST {base_url}/v1/chat/completions.
nlohmann::json build_chat_request(const std::string& model, const std::string& prompt,
                                  const GenerationParams& params, int n);

/// One Continuation per choice, in choice order. Throws kMalformedResponse.
std::vector<Continuation> parse_chat_response(const std::string& body);

/// OpenAI-compatible chat-completions client. Retries 429 and 5xx with
/// exponential backoff (backoff_base * 2^attempt) up to `retries` extra tries.
class RemoteBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RemoteBackend(BackendConfig cfg, Sleeper sleeper = {});

  std::string id() const override { return cfg_.model; }
  Capabilities capabilities() const override { return cfg_.capabilities(); }
  Generation generate(const std::string& prompt, const GenerationParams& params,
                      std::span<const std::size_t> sample_indices) override;

  /// Single request returning `n` choices.
  std::vector<Continuation> complete(const std::string& prompt, const GenerationParams& params, int n);

 private:
  std::string api_key() const;

  BackendConfig cfg_;
  Sleeper sleeper_;
};

}  // namespace tailprobe
