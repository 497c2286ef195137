#include "tailprobe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "random.hpp"
#include "tailprobe/error.hpp"

namespace tailprobe {

namespace {

constexpr const char* kSyllables[] = {"ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
                                      "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu",
                                      "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
                                      "ra", "re", "ri", "ro", "ru", "sa", "se", "si", "so", "su",
                                      "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo", "vu"};
constexpr std::size_t kSyllableCount = std::size(kSyllables);

// Two or more CV syllables; distinct ids give distinct words.
std::string pseudo_word(std::size_t id) {
  std::string word;
  std::size_t rest = id;
  std::size_t emitted = 0;
  do {
    word += kSyllables[rest % kSyllableCount];
    rest /= kSyllableCount;
    ++emitted;
  } while (rest > 0 || emitted < 2);
  return word;
}

std::vector<double> zipf_cumulative(std::size_t n, double exponent) {
  std::vector<double> cumulative(n);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
    cumulative[r] = total;
  }
  for (double& c : cumulative) c /= total;
  return cumulative;
}

std::string padded(std::size_t value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu", value);
  return buf;
}

}  // namespace

SyntheticLanguage::SyntheticLanguage(std::uint64_t seed, std::size_t vocabulary, std::size_t successors,
                                     double zipf_exponent) {
  if (vocabulary < 2 || successors < 1 || successors > vocabulary) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic language needs 1 <= successors <= vocabulary");
  }
  words_.reserve(vocabulary);
  for (std::size_t i = 0; i < vocabulary; ++i) words_.push_back(pseudo_word(i));
  start_cumulative_ = zipf_cumulative(vocabulary, zipf_exponent);
  successor_cumulative_ = zipf_cumulative(successors, 1.0);

  std::mt19937_64 rng(detail::stream_seed(seed, 1));
  successors_.resize(vocabulary);
  for (auto& list : successors_) {
    list.reserve(successors);
    while (list.size() < successors) {
      const auto next = static_cast<std::uint32_t>(draw(start_cumulative_, detail::uniform_unit(rng)));
      if (std::find(list.begin(), list.end(), next) == list.end()) list.push_back(next);
    }
  }
}

std::size_t SyntheticLanguage::draw(std::span<const double> cumulative, double u) const {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

TokenSequence SyntheticLanguage::document(std::uint64_t seed, std::size_t length) const {
  std::mt19937_64 rng(seed);
  TokenSequence tokens;
  tokens.reserve(length);
  std::size_t current = draw(start_cumulative_, detail::uniform_unit(rng));
  for (std::size_t i = 0; i < length; ++i) {
    tokens.push_back(words_[current]);
    current = successors_[current][draw(successor_cumulative_, detail::uniform_unit(rng))];
  }
  return tokens;
}

std::shared_ptr<const MarkovModel> train_markov(std::span<const TextSample> corpus, int order, double alpha) {
  std::vector<TokenSequence> sequences;
  sequences.reserve(corpus.size());
  for (const auto& sample : corpus) sequences.push_back(tokenize(sample.text));
  return std::make_shared<const MarkovModel>(MarkovModel::train(sequences, order, alpha));
}

SynthBenchmark build_synth_benchmark(const SynthConfig& cfg) {
  if (cfg.doc_tokens < 2 || cfg.prompt_tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic documents too short");
  }
  if (cfg.composite_samples > std::min(cfg.ai_samples, cfg.human_samples)) {
    throw Error(ErrorCode::kInvalidArgument, "composites reuse ai and human samples; too many requested");
  }
  const SyntheticLanguage language(cfg.seed, cfg.vocabulary, cfg.successors, cfg.zipf_exponent);
  const std::uint64_t doc_stream = detail::stream_seed(cfg.seed, 2);
  std::uint64_t doc_counter = 0;
  auto next_document = [&](std::size_t length) {
    return language.document(detail::splitmix64(doc_stream + doc_counter++), length);
  };

  SynthBenchmark bench;
  const std::size_t train_len = cfg.prompt_tokens + cfg.doc_tokens;
  for (std::size_t i = 0; i < cfg.train_docs_per_model; ++i) {
    bench.corpus_a.push_back({"a-" + padded(i), detokenize(next_document(train_len)), std::nullopt,
                              std::nullopt, std::nullopt});
  }
  for (std::size_t i = 0; i < cfg.train_docs_per_model; ++i) {
    bench.corpus_b.push_back({"b-" + padded(i), detokenize(next_document(train_len)), std::nullopt,
                              std::nullopt, std::nullopt});
  }
  const auto model_a = train_markov(bench.corpus_a, cfg.order, cfg.alpha);
  const auto model_b = train_markov(bench.corpus_b, cfg.order, cfg.alpha);

  std::vector<TokenSequence> ai_tokens;
  auto generate = [&](const MarkovModel& model, std::uint64_t stream, std::size_t i, const std::string& id,
                      const char* source) {
    const TokenSequence prompt = next_document(cfg.prompt_tokens);
    GenerationParams params;
    params.temperature = cfg.temperature;
    params.max_tokens = static_cast<int>(cfg.doc_tokens);
    params.seed = detail::splitmix64(stream + i);
    Continuation generated = model.generate(prompt, params);
    TextSample sample{id, generated.text, Label::kAi, std::string(source), detokenize(prompt)};
    return std::make_pair(std::move(sample), std::move(generated.tokens));
  };
  const std::uint64_t a_stream = detail::stream_seed(cfg.seed, 3);
  for (std::size_t i = 0; i < cfg.ai_samples; ++i) {
    auto [sample, tokens] = generate(*model_a, a_stream, i, "ai-" + padded(i), kSynthModelA);
    bench.samples.push_back(std::move(sample));
    ai_tokens.push_back(std::move(tokens));
  }
  std::vector<TokenSequence> human_tokens;
  for (std::size_t i = 0; i < cfg.human_samples; ++i) {
    TokenSequence doc = next_document(train_len);
    const auto split = doc.begin() + static_cast<std::ptrdiff_t>(cfg.prompt_tokens);
    TokenSequence body(split, doc.end());
    bench.samples.push_back({"human-" + padded(i), detokenize(body), Label::kHuman, std::nullopt,
                             detokenize(TokenSequence(doc.begin(), split))});
    human_tokens.push_back(std::move(body));
  }
  for (std::size_t i = 0; i < cfg.composite_samples; ++i) {
    const TokenSequence& ai = ai_tokens[i];
    const TokenSequence& human = human_tokens[i];
    TokenSequence mixed(ai.begin(), ai.begin() + static_cast<std::ptrdiff_t>(ai.size() / 2));
    mixed.insert(mixed.end(), human.begin() + static_cast<std::ptrdiff_t>(human.size() / 2), human.end());
    bench.composites.push_back({"mix-" + padded(i), detokenize(mixed), Label::kAi, std::string(kSynthModelA),
                                bench.samples[i].prompt});
  }
  const std::uint64_t b_stream = detail::stream_seed(cfg.seed, 4);
  for (std::size_t i = 0; i < cfg.b_samples; ++i) {
    bench.samples_b.push_back(generate(*model_b, b_stream, i, "ai-b-" + padded(i), kSynthModelB).first);
  }
  return bench;
}

}  // namespace tailprobe
