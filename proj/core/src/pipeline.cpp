#include "tailprobe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <future>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "digest.hpp"
#include "tailprobe/error.hpp"

namespace tailprobe {

std::string_view to_string(DetectionMode mode) {
  return mode == DetectionMode::kWhiteBox ? "white_box" : "black_box";
}

std::string_view to_string(PromptMode mode) {
  return mode == PromptMode::kKnownPrompt ? "known_prompt" : "text_only";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kAi: return "ai";
    case Verdict::kHuman: return "human";
    case Verdict::kUndecided: return "undecided";
  }
  return "undecided";
}

std::optional<DetectionMode> parse_detection_mode(std::string_view text) {
  if (text == "black_box" || text == "black-box") return DetectionMode::kBlackBox;
  if (text == "white_box" || text == "white-box") return DetectionMode::kWhiteBox;
  return std::nullopt;
}

std::optional<PromptMode> parse_prompt_mode(std::string_view text) {
  if (text == "known_prompt" || text == "known-prompt") return PromptMode::kKnownPrompt;
  if (text == "text_only" || text == "text-only") return PromptMode::kTextOnly;
  return std::nullopt;
}

int DetectionConfig::resolved_k() const {
  if (k) return *k;
  return mode == DetectionMode::kWhiteBox ? kDefaultWhiteBoxK : kDefaultBlackBoxK;
}

std::size_t DetectionConfig::resolved_evidence_min_len() const {
  return evidence_min_len.value_or(static_cast<std::size_t>(ngram.n0));
}

void DetectionConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0,1)");
  if (resolved_k() < 1) throw Error(ErrorCode::kInvalidArgument, "K must be >= 1");
  if (resolved_evidence_min_len() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "evidence minimum length must be >= 1");
  }
  if (max_tokens < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  ngram.validate();
}

bool operator==(const DetectionResult& a, const DetectionResult& b) {
  return a.sample_id == b.sample_id && a.score == b.score && a.mode == b.mode &&
         a.verdict == b.verdict && a.threshold == b.threshold && a.evidence == b.evidence &&
         a.breakdown == b.breakdown && a.regen == b.regen && a.token_count == b.token_count &&
         a.prefix_tokens == b.prefix_tokens && a.tail_tokens == b.tail_tokens &&
         a.evidence_min_len == b.evidence_min_len && a.windows == b.windows;
}

Verdict classify(double score, double epsilon) {
  return score > epsilon ? Verdict::kAi : Verdict::kHuman;
}

void apply_threshold(DetectionResult& result, double epsilon) {
  result.threshold = epsilon;
  if (result.windows.empty()) {
    result.verdict = classify(result.score, epsilon);
    return;
  }
  bool any_ai = false;
  for (auto& window : result.windows) {
    apply_threshold(window, epsilon);
    any_ai = any_ai || window.verdict == Verdict::kAi;
  }
  result.verdict = any_ai ? Verdict::kAi : Verdict::kHuman;
}

namespace {

Generation regenerate(Backend& backend, const std::string& prompt, const GenerationParams& params,
                      std::size_t k, std::size_t workers) {
  const std::vector<std::size_t> indices = sample_range(k);
  workers = std::clamp<std::size_t>(workers, 1, k);
  if (workers == 1) return backend.generate(prompt, params, indices);

  // Contiguous index chunks; reassembled in index order.
  std::vector<std::future<Generation>> parts;
  const std::size_t chunk = (k + workers - 1) / workers;
  for (std::size_t begin = 0; begin < k; begin += chunk) {
    const std::size_t end = std::min(k, begin + chunk);
    parts.push_back(std::async(std::launch::async, [&, begin, end] {
      return backend.generate(prompt, params,
                              std::span<const std::size_t>(indices).subspan(begin, end - begin));
    }));
  }
  Generation all;
  for (auto& part : parts) {
    Generation g = part.get();
    all.cache_hits += g.cache_hits;
    for (auto& c : g.continuations) all.continuations.push_back(std::move(c));
  }
  return all;
}

double sum(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace

DetectionResult detect(const TextSample& sample, Backend& backend, const DetectionConfig& cfg) {
  cfg.validate();
  const TokenSequence tokens = tokenize(sample.text);
  if (tokens.size() < cfg.min_tokens) {
    throw Error(ErrorCode::kTooShort, "sample '" + sample.id + "' has " + std::to_string(tokens.size()) +
                                          " tokens, need " + std::to_string(cfg.min_tokens));
  }
  if (cfg.mode == DetectionMode::kWhiteBox && !backend.capabilities().can_score_continuation) {
    throw Error(ErrorCode::kCapability,
                "white-box detection needs a backend that scores continuations; '" + backend.id() +
                    "' does not");
  }
  const TruncationSplit split = truncate(tokens, cfg.gamma);
  const std::string prompt = detokenize(split.prefix);
  const auto k = static_cast<std::size_t>(cfg.resolved_k());

  GenerationParams params;
  params.temperature = cfg.temperature;
  params.max_tokens = cfg.max_tokens;
  params.k_samples = static_cast<int>(k);
  params.seed = cfg.seed;
  params.want_logprobs = false;
  if (cfg.prompt_mode == PromptMode::kKnownPrompt && sample.prompt && !sample.prompt->empty()) {
    params.question_prompt = sample.prompt;
  }

  Generation generation = regenerate(backend, prompt, params, k, cfg.regen_workers);
  if (generation.continuations.size() != k) {
    throw Error(ErrorCode::kMalformedResponse, "backend returned " +
                                                   std::to_string(generation.continuations.size()) +
                                                   " continuations, expected " + std::to_string(k));
  }

  RegenerationSet omega;
  omega.regens.reserve(k);
  for (auto& continuation : generation.continuations) omega.regens.push_back(std::move(continuation.tokens));

  DetectionResult result;
  result.sample_id = sample.id;
  result.mode = cfg.mode;
  result.threshold = cfg.threshold;
  result.token_count = tokens.size();
  result.prefix_tokens = split.prefix.size();
  result.tail_tokens = split.tail.size();
  result.evidence_min_len = cfg.resolved_evidence_min_len();
  result.regen = {k, backend.id(), generation.cache_hits};

  if (cfg.mode == DetectionMode::kBlackBox) {
    ScoreResult scored = bscore(split.tail, omega, cfg.ngram);
    result.score = scored.score;
    result.breakdown = std::move(scored.breakdown);
  } else {
    const std::string scoring_prompt = compose_prompt(params, prompt);
    omega.tail_logprob = sum(backend.score_continuation(scoring_prompt, split.tail));
    std::vector<double> logprobs;
    logprobs.reserve(k);
    for (const auto& regen : omega.regens) {
      logprobs.push_back(sum(backend.score_continuation(scoring_prompt, regen)));
    }
    omega.logprobs = std::move(logprobs);
    result.score = wscore(omega, cfg.wscore_variant, split.tail.size());
    // Per-regeneration log ratios in the same variant.
    for (std::size_t i = 0; i < k; ++i) {
      RegenerationSet single;
      single.regens = {omega.regens[i]};
      single.logprobs = std::vector<double>{(*omega.logprobs)[i]};
      single.tail_logprob = omega.tail_logprob;
      result.breakdown.per_regen.push_back(wscore(single, cfg.wscore_variant, split.tail.size()));
    }
  }

  result.evidence = extract_evidence(omega, split.tail, result.evidence_min_len);
  result.verdict = cfg.threshold ? classify(result.score, *cfg.threshold) : Verdict::kUndecided;
  return result;
}

std::vector<std::size_t> window_sizes(std::size_t length, std::size_t parts) {
  if (parts == 0) throw Error(ErrorCode::kInvalidArgument, "window count must be >= 1");
  std::vector<std::size_t> sizes(parts, length / parts);
  for (std::size_t i = 0; i < length % parts; ++i) ++sizes[i];
  return sizes;
}

DetectionResult detect_sliding(const TextSample& sample, Backend& backend, const DetectionConfig& cfg,
                               std::size_t windows) {
  if (windows == 0) throw Error(ErrorCode::kInvalidArgument, "window count must be >= 1");
  if (windows == 1) return detect(sample, backend, cfg);
  cfg.validate();

  const TokenSequence tokens = tokenize(sample.text);
  const std::vector<std::size_t> sizes = window_sizes(tokens.size(), windows);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < cfg.min_tokens) {
      throw Error(ErrorCode::kWindowTooShort, "window " + std::to_string(i) + " of sample '" + sample.id +
                                                  "' has " + std::to_string(sizes[i]) + " tokens, need " +
                                                  std::to_string(cfg.min_tokens));
    }
  }

  DetectionResult overall;
  overall.sample_id = sample.id;
  overall.mode = cfg.mode;
  overall.threshold = cfg.threshold;
  overall.token_count = tokens.size();
  overall.evidence_min_len = cfg.resolved_evidence_min_len();
  overall.regen.backend_id = backend.id();

  std::size_t offset = 0;
  std::size_t best = 0;
  bool any_ai = false;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    TextSample window = sample;
    window.id = sample.id + "#w" + std::to_string(i);
    window.text = detokenize(TokenSpan(tokens).subspan(offset, sizes[i]));
    offset += sizes[i];
    DetectionResult part = detect(window, backend, cfg);
    any_ai = any_ai || part.verdict == Verdict::kAi;
    overall.regen.k += part.regen.k;
    overall.regen.cache_hits += part.regen.cache_hits;
    if (i == 0 || part.score > overall.windows[best].score) best = i;
    overall.windows.push_back(std::move(part));
  }

  const DetectionResult& top = overall.windows[best];
  overall.score = top.score;
  overall.evidence = top.evidence;
  overall.breakdown = top.breakdown;
  overall.prefix_tokens = top.prefix_tokens;
  overall.tail_tokens = top.tail_tokens;
  if (cfg.threshold) {
    overall.verdict = any_ai ? Verdict::kAi : Verdict::kHuman;
  } else {
    overall.verdict = Verdict::kUndecided;
  }
  return overall;
}

std::vector<DetectionResult> detect_batch(std::span<const TextSample> samples, Backend& backend,
                                          const DetectionConfig& cfg, std::size_t jobs,
                                          std::size_t windows) {
  std::vector<DetectionResult> results(samples.size());
  auto run_one = [&](std::size_t i) {
    results[i] = detect_sliding(samples[i], backend, cfg, windows);
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(samples.size(), 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) run_one(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::size_t failed_index = samples.size();
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < samples.size(); i = next++) {
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          // Report the earliest failing sample, as a sequential run would.
          if (i < failed_index) {
            failed_index = i;
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::uint64_t candidate_seed(std::uint64_t base_seed, std::string_view model_id) {
  const std::string digest = detail::sha256_hex(model_id);
  return base_seed + std::stoull(digest.substr(0, 16), nullptr, 16);
}

SourceAttribution source_model(const TextSample& sample, std::span<Backend* const> candidates,
                               const DetectionConfig& cfg) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "need at least one candidate model");
  SourceAttribution attribution;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Backend& backend = *candidates[i];
    CandidateScore entry;
    entry.model_id = backend.id();
    DetectionConfig candidate_cfg = cfg;
    candidate_cfg.seed = candidate_seed(cfg.seed, entry.model_id);
    try {
      entry.score = detect(sample, backend, candidate_cfg).score;
    } catch (const Error& e) {
      entry.failed = true;
      entry.error = e.what();
    }
    attribution.ranking.push_back(std::move(entry));
  }
  std::stable_sort(attribution.ranking.begin(), attribution.ranking.end(),
                   [](const CandidateScore& a, const CandidateScore& b) { return a.score > b.score; });
  attribution.winner = attribution.ranking.front().model_id;
  return attribution;
}

}  // namespace tailprobe
