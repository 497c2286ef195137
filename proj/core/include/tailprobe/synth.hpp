#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tailprobe/markov.hpp"
#include "tailprobe/text.hpp"

namespace tailprobe {

/// Seeded stand-in for a human-written corpus: a sparse first-order chain over
/// pseudo-words with Zipf-distributed popularity.
class SyntheticLanguage {
 public:
  SyntheticLanguage(std::uint64_t seed, std::size_t vocabulary, std::size_t successors, double zipf_exponent);

  TokenSequence document(std::uint64_t seed, std::size_t length) const;
  const std::string& word(std::size_t id) const { return words_[id]; }
  std::size_t vocabulary() const { return words_.size(); }

 private:
  std::size_t draw(std::span<const double> cumulative, double u) const;

  std::vector<std::string> words_;
  std::vector<double> start_cumulative_;
  std::vector<std::vector<std::uint32_t>> successors_;
  std::vector<double> successor_cumulative_;
};

struct SynthConfig {
  std::uint64_t seed = 7;
  std::size_t vocabulary = 100;
  std::size_t successors = 6;
  double zipf_exponent = 1.1;
  std::size_t train_docs_per_model = 150;
  std::size_t doc_tokens = 160;
  std::size_t prompt_tokens = 10;
  std::size_t ai_samples = 100;
  std::size_t human_samples = 100;
  std::size_t composite_samples = 50;
  std::size_t b_samples = 50;
  int order = 8;
  double alpha = 1e-6;
  double temperature = 0.7;
};

/// Two generators trained on disjoint halves of a synthetic corpus, with a
/// labeled evaluation set: ai samples from model A, held-out human samples,
/// composites whose first half is ai and second half human, and ai samples
/// from model B for source attribution.
struct SynthBenchmark {
  std::vector<TextSample> corpus_a;
  std::vector<TextSample> corpus_b;
  std::vector<TextSample> samples;     // ai (model A) first, then human
  std::vector<TextSample> composites;  // labeled ai
  std::vector<TextSample> samples_b;   // ai, model B
};

inline constexpr const char* kSynthModelA = "markov-a";
inline constexpr const char* kSynthModelB = "markov-b";

SynthBenchmark build_synth_benchmark(const SynthConfig& cfg);

std::shared_ptr<const MarkovModel> train_markov(std::span<const TextSample> corpus, int order, double alpha);

}  // namespace tailprobe
