#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailprobe/generation.hpp"
#include "tailprobe/scoring.hpp"
#include "tailprobe/text.hpp"

namespace tailprobe {

enum class DetectionMode { kBlackBox, kWhiteBox };
enum class PromptMode { kKnownPrompt, kTextOnly };
enum class Verdict { kAi, kHuman, kUndecided };

std::string_view to_string(DetectionMode mode);
std::string_view to_string(PromptMode mode);
std::string_view to_string(Verdict verdict);
std::optional<DetectionMode> parse_detection_mode(std::string_view text);
std::optional<PromptMode> parse_prompt_mode(std::string_view text);

inline constexpr int kDefaultBlackBoxK = 10;
inline constexpr int kDefaultWhiteBoxK = 5;

struct DetectionConfig {
  double gamma = 0.5;
  std::optional<int> k;  // unset: 10 black-box, 5 white-box
  DetectionMode mode = DetectionMode::kBlackBox;
  NgramConfig ngram;
  std::optional<double> threshold;
  std::size_t min_tokens = 20;
  PromptMode prompt_mode = PromptMode::kTextOnly;
  std::optional<std::size_t> evidence_min_len;  // unset: ngram.n0
  double temperature = 0.7;
  int max_tokens = 300;
  std::uint64_t seed = 0;
  WScoreVariant wscore_variant = WScoreVariant::kSequence;
  // Regenerations of one sample issued concurrently when > 1.
  std::size_t regen_workers = 1;

  int resolved_k() const;
  std::size_t resolved_evidence_min_len() const;
  void validate() const;
};

struct RegenMetadata {
  std::size_t k = 0;
  std::string backend_id;
  std::size_t cache_hits = 0;

  bool operator==(const RegenMetadata&) const = default;
};

struct DetectionResult {
  std::string sample_id;
  double score = 0.0;
  DetectionMode mode = DetectionMode::kBlackBox;
  Verdict verdict = Verdict::kUndecided;
  std::optional<double> threshold;
  std::vector<EvidenceSpan> evidence;
  ScoreBreakdown breakdown;
  RegenMetadata regen;
  std::size_t token_count = 0;
  std::size_t prefix_tokens = 0;
  std::size_t tail_tokens = 0;
  std::size_t evidence_min_len = 0;
  // Sliding-window runs keep each window's result here.
  std::vector<DetectionResult> windows;
};

bool operator==(const DetectionResult& a, const DetectionResult& b);

/// ai iff score > epsilon.
Verdict classify(double score, double epsilon);

/// Re-derives verdicts (including per-window ones) for a new threshold.
void apply_threshold(DetectionResult& result, double epsilon);

/// Truncate, regenerate K continuations of the prefix, score them against the
/// tail, and classify when a threshold is configured.
///
/// Black-box mode scores n-gram overlap and never asks the backend for
/// log-probabilities. White-box mode asks the backend to score the tail and
/// each regeneration at T = 1 and reports the mean log-probability ratio.
/// Throws kTooShort, kCapability, or the backend's error.
DetectionResult detect(const TextSample& sample, Backend& backend, const DetectionConfig& cfg);

/// Runs detect on `windows` contiguous near-equal token windows. The verdict is
/// ai when any window is ai and the score is the window maximum. A single
/// window is exactly detect.
DetectionResult detect_sliding(const TextSample& sample, Backend& backend, const DetectionConfig& cfg,
                               std::size_t windows);

/// Contiguous split of `length` into `parts` sizes differing by at most one,
/// larger parts first.
std::vector<std::size_t> window_sizes(std::size_t length, std::size_t parts);

/// detect over many samples with up to `jobs` worker threads; output follows
/// input order.
std::vector<DetectionResult> detect_batch(std::span<const TextSample> samples, Backend& backend,
                                          const DetectionConfig& cfg, std::size_t jobs = 1,
                                          std::size_t windows = 1);

struct CandidateScore {
  std::string model_id;
  double score = -std::numeric_limits<double>::infinity();
  bool failed = false;
  std::string error;
};

struct SourceAttribution {
  std::vector<CandidateScore> ranking;  // descending score, ties in input order
  std::string winner;
};

/// Regeneration seed for a sourcing candidate. Depends only on the model id,
/// so identical candidates draw identical regenerations.
std::uint64_t candidate_seed(std::uint64_t base_seed, std::string_view model_id);

/// Scores the sample against every candidate with the same configuration and
/// ranks them with a stable sort. A failing candidate is kept with score -inf and failed = true.
SourceAttribution source_model(const TextSample& sample, std::span<Backend* const> candidates,
                               const DetectionConfig& cfg);

}  // namespace tailprobe
