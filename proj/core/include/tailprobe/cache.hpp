#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "tailprobe/generation.hpp"

namespace tailprobe {

/// On-disk continuation cache: one `<sha256>.json` file per key holding
/// {"text": ..., "token_logprobs": [...] | null}. Corrupt entries read as misses.
class GenerationCache {
 public:
  using WarningSink = std::function<void(std::string_view)>;

  explicit GenerationCache(std::filesystem::path directory, WarningSink on_warning = {});

  /// Lowercase hex SHA-256 of the canonical JSON array
  /// [model_id, prompt, temperature, max_tokens, seed|null, sample_index].
  static std::string key(std::string_view model_id, std::string_view prompt,
                         const GenerationParams& params, std::size_t sample_index);
  static std::string canonical_form(std::string_view model_id, std::string_view prompt,
                                    const GenerationParams& params, std::size_t sample_index);

  std::filesystem::path path_for(std::string_view key) const;
  std::optional<Continuation> load(std::string_view key) const;
  void store(std::string_view key, const Continuation& continuation);

  /// Serves sample `sample_index` from disk, or asks the backend and persists.
  Continuation generate(Backend& backend, const std::string& prompt, const GenerationParams& params,
                        std::size_t sample_index, bool* hit = nullptr);

  const std::filesystem::path& directory() const { return directory_; }

 private:
  std::mutex& stripe(std::string_view key) const;

  std::filesystem::path directory_;
  WarningSink on_warning_;
  mutable std::array<std::mutex, 32> stripes_;
};

/// Backend decorator that routes generation through a GenerationCache.
class CachedBackend : public Backend {
 public:
  CachedBackend(Backend& inner, GenerationCache& cache) : inner_(inner), cache_(cache) {}

  std::string id() const override { return inner_.id(); }
  Capabilities capabilities() const override { return inner_.capabilities(); }
  Generation generate(const std::string& prompt, const GenerationParams& params,
                      std::span<const std::size_t> sample_indices) override;
  std::vector<double> score_continuation(const std::string& prompt, TokenSpan continuation) override {
    return inner_.score_continuation(prompt, continuation);
  }

 private:
  Backend& inner_;
  GenerationCache& cache_;
};

}  // namespace tailprobe
