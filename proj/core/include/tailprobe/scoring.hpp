#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "tailprobe/text.hpp"

namespace tailprobe {

/// Weight applied to the overlap ratio of each n-gram order.
enum class WeightFunction { kLogN, kN, kNLogN, kNLog2N, kNSquared, kExpN };

std::string_view to_string(WeightFunction fn);
std::optional<WeightFunction> parse_weight_function(std::string_view name);
bool is_log_based(WeightFunction fn);

/// N-gram orders and weighting used by the overlap score.
///
/// Defaults are n0 = 4, N = 25 and f(n) = n ln n. exp_n weights saturate at
/// e^exp_cap so that large N cannot overflow.
struct NgramConfig {
  int n0 = 4;
  int n_max = 25;
  WeightFunction weight = WeightFunction::kNLogN;
  double exp_cap = 30.0;

  /// Throws kInvalidArgument when n0 < 1 or n_max < n0, kDomain when a
  /// log-based weight would be evaluated at n < 2.
  void validate() const;

  bool operator==(const NgramConfig&) const = default;
};

/// The K regenerations of the tail, optionally with their sequence
/// log-probabilities and the log-probability of the original tail.
struct RegenerationSet {
  std::vector<TokenSequence> regens;
  std::optional<std::vector<double>> logprobs;
  std::optional<double> tail_logprob;
};

/// A maximal token run shared by regeneration `regen_index` and the tail.
struct EvidenceSpan {
  TokenSequence tokens;
  std::size_t regen_index = 0;
  std::size_t pos_in_regen = 0;
  std::size_t pos_in_tail = 0;

  std::size_t length() const { return tokens.size(); }
  bool operator==(const EvidenceSpan&) const = default;
};

struct NgramTerm {
  std::size_t intersections = 0;  // summed over regenerations
  std::size_t tail_ngrams = 0;    // distinct n-grams of the tail
  double weighted = 0.0;          // contribution to the final score

  bool operator==(const NgramTerm&) const = default;
};

/// Explainability payload for a score. Both views sum to the score: the
/// weighted terms directly, the per-regeneration partials after averaging.
struct ScoreBreakdown {
  std::map<int, NgramTerm> per_n;
  std::vector<double> per_regen;

  bool operator==(const ScoreBreakdown&) const = default;
};

struct ScoreResult {
  double score = 0.0;
  ScoreBreakdown breakdown;
};

using Ngram = std::vector<std::string>;

/// Distinct contiguous n-token runs.
std::set<Ngram> extract_ngrams(TokenSpan tokens, int n);

double weight(const NgramConfig& cfg, int n);

/// Black-box overlap score
///
///   (1/K) sum_k sum_{n=n0}^{N} f(n) |G_n(S'_k) & G_n(tail)| / (|S'_k| |G_n(tail)|)
///
/// where G_n is the set of distinct n-grams. Orders with no tail n-grams and
/// empty regenerations contribute zero.
ScoreResult bscore(TokenSpan tail, const RegenerationSet& omega, const NgramConfig& cfg);

enum class WScoreVariant {
  kSequence,        // raw sequence log-probabilities
  kPerTokenMean,    // log-probabilities divided by token counts
};

/// White-box score: mean over k of log p(tail | prefix) - log p(S'_k | prefix).
/// Throws kMissingLogprobs when either side is absent.
double wscore(const RegenerationSet& omega);

/// Length-normalized variant; `tail_tokens` and the regeneration lengths divide
/// the respective log-probabilities.
double wscore(const RegenerationSet& omega, WScoreVariant variant, std::size_t tail_tokens);

/// Maximal common token runs of length >= min_len between one regeneration and
/// the tail, longest first, ties by (pos_in_tail, pos_in_regen).
std::vector<EvidenceSpan> extract_evidence(TokenSpan regen, TokenSpan tail, std::size_t min_len,
                                           std::size_t regen_index);

/// Evidence over every regeneration, longest first, ties by (regen_index,
/// pos_in_tail, pos_in_regen).
std::vector<EvidenceSpan> extract_evidence(const RegenerationSet& omega, TokenSpan tail,
                                           std::size_t min_len);

}  // namespace tailprobe
