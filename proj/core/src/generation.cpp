#include "tailprobe/generation.hpp"

#include <numeric>

#include "tailprobe/error.hpp"

namespace tailprobe {

void GenerationParams::validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (max_tokens < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
  if (k_samples < 1) throw Error(ErrorCode::kInvalidArgument, "k_samples must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::size_t sample_index) {
  return base_seed + static_cast<std::uint64_t>(sample_index);
}

Continuation Continuation::from_text(std::string text,
                                     std::optional<std::vector<double>> token_logprobs) {
  Continuation c;
  c.tokens = tokenize(text);
  c.text = std::move(text);
  if (token_logprobs) {
    c.sum_logprob = std::accumulate(token_logprobs->begin(), token_logprobs->end(), 0.0);
    c.token_logprobs = std::move(token_logprobs);
  }
  return c;
}

std::vector<double> Backend::score_continuation(const std::string&, TokenSpan) {
  throw Error(ErrorCode::kCapability, "backend '" + id() + "' cannot score continuations");
}

std::string compose_prompt(const GenerationParams& params, const std::string& prompt) {
  if (!params.question_prompt || params.question_prompt->empty()) return prompt;
  return *params.question_prompt + "\n" + prompt;
}

Capabilities BackendConfig::capabilities() const {
  if (kind == BackendKind::kMarkov) return {true, true, true};
  return {true, false, false};
}

std::vector<std::size_t> sample_range(std::size_t count) {
  std::vector<std::size_t> indices(count);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  return indices;
}

}  // namespace tailprobe
