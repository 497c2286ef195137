#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailprobe/text.hpp"

namespace tailprobe {

struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 300;
  int k_samples = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> system_prompt;
  std::optional<std::string> question_prompt;
  // Black-box callers leave this off; backends then omit token log-probabilities.
  bool want_logprobs = false;

  void validate() const;
};

// Per-sample seed for regeneration `sample_index`.
std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t sample_index);

struct Continuation {
  std::string text;
  TokenSequence tokens;
  std::optional<std::vector<double>> token_logprobs;
  std::optional<double> sum_logprob;

  static Continuation from_text(std::string text,
                                std::optional<std::vector<double>> token_logprobs = std::nullopt);

  bool operator==(const Continuation&) const = default;
};

struct Capabilities {
  bool can_sample = true;
  bool can_score_continuation = false;
  // Seeded in-process generator; outputs are reproducible.
  bool local = false;
};

struct Generation {
  std::vector<Continuation> continuations;  // one per requested sample index, same order
  std::size_t cache_hits = 0;
};

/// Continuation source. Implementations must be safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string id() const = 0;
  virtual Capabilities capabilities() const = 0;

  /// One continuation of `prompt` per entry of `sample_indices`.
  virtual Generation generate(const std::string& prompt, const GenerationParams& params,
                              std::span<const std::size_t> sample_indices) = 0;

  /// Natural-log probability of each continuation token given the prompt, at
  /// temperature 1. The default throws kCapability.
  virtual std::vector<double> score_continuation(const std::string& prompt,
                                                 TokenSpan continuation);
};

// Question prompt (when set) followed by the prompt text.
std::string compose_prompt(const GenerationParams& params, const std::string& prompt);

enum class BackendKind { kMarkov, kRemote };

struct BackendConfig {
  BackendKind kind = BackendKind::kMarkov;

  // remote
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{60'000};
  int retries = 3;
  std::chrono::milliseconds backoff_base{500};
  // When false, K samples are drawn with K requests of n=1.
  bool supports_n = true;

  // markov
  std::string corpus_path;
  int order = 2;
  double alpha = 1e-6;

  Capabilities capabilities() const;
};

std::vector<std::size_t> sample_range(std::size_t count);

}  // namespace tailprobe
