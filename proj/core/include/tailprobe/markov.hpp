#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tailprobe/generation.hpp"
#include "tailprobe/text.hpp"

namespace tailprobe {

inline constexpr const char* kUnknownToken = "<unk>";

/// Order-k word model with additive smoothing and suffix backoff.
///
/// Counts are kept for every context length 0..order. At query time the
/// longest suffix of the history that was observed in training is used, and
/// P(v | ctx) = (count(ctx, v) + alpha) / (total(ctx) + alpha * |V|), where V
/// includes the unknown-token symbol. Immutable once trained.
class MarkovModel {
 public:
  struct Successor {
    std::uint32_t token;
    std::uint64_t count;
  };

  struct Node {
    std::uint64_t total = 0;
    std::vector<Successor> successors;  // sorted by token id
  };

  static MarkovModel train(std::span<const TokenSequence> corpus, int order, double alpha);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  std::size_t vocabulary_size() const { return vocab_.size(); }
  const std::string& token(std::uint32_t id) const { return vocab_[id]; }
  std::uint32_t lookup(const std::string& token) const;
  bool has_transitions() const;

  /// Content fingerprint over training data and hyperparameters.
  const std::string& fingerprint() const { return fingerprint_; }

  /// Longest observed suffix context of `history`; nullptr when none.
  const Node* context_node(std::span<const std::uint32_t> history) const;

  /// Full distribution over the vocabulary for the given history.
  std::vector<double> distribution(std::span<const std::uint32_t> history) const;

  std::vector<std::uint32_t> encode(TokenSpan tokens) const;

  /// Samples params.max_tokens tokens from p^(1/T)/Z with mt19937_64 seeded by
  /// params.seed. Logprobs are those of the sampled tokens under the scaled
  /// distribution. T = 0 decodes greedily.
  Continuation generate(TokenSpan prompt, const GenerationParams& params) const;

  /// ln P(token | history) at T = 1 for each continuation token.
  std::vector<double> score(TokenSpan prompt, TokenSpan continuation) const;

  /// All observed contexts, for diagnostics and normalization checks.
  std::vector<std::vector<std::uint32_t>> contexts() const;

 private:
  struct VectorHash {
    std::size_t operator()(const std::vector<std::uint32_t>& key) const noexcept;
  };
  using ContextTable = std::unordered_map<std::vector<std::uint32_t>, Node, VectorHash>;

  double probability(const Node* node, std::uint32_t token) const;
  const Node& require_node(std::span<const std::uint32_t> history) const;

  int order_ = 1;
  double alpha_ = 0.0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<ContextTable> tables_;  // index = context length
  std::string fingerprint_;
};

/// Backend over a trained MarkovModel. Sample i uses seed derive_seed(seed, i).
class MarkovBackend : public Backend {
 public:
  MarkovBackend(std::shared_ptr<const MarkovModel> model, std::string name = {});

  std::string id() const override;
  Capabilities capabilities() const override { return {true, true, true}; }
  Generation generate(const std::string& prompt, const GenerationParams& params,
                      std::span<const std::size_t> sample_indices) override;
  std::vector<double> score_continuation(const std::string& prompt,
                                         TokenSpan continuation) override;

  const MarkovModel& model() const { return *model_; }

 private:
  std::shared_ptr<const MarkovModel> model_;
  std::string name_;
};

}  // namespace tailprobe
