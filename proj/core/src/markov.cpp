#include "tailprobe/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "digest.hpp"
#include "random.hpp"
#include "tailprobe/error.hpp"

namespace tailprobe {

namespace {

bool is_successor(const MarkovModel::Node& node, std::uint32_t token) {
  auto it = std::lower_bound(node.successors.begin(), node.successors.end(), token,
                             [](const MarkovModel::Successor& s, std::uint32_t t) { return s.token < t; });
  return it != node.successors.end() && it->token == token;
}

}  // namespace

std::size_t MarkovModel::VectorHash::operator()(const std::vector<std::uint32_t>& key) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint32_t v : key) {
    h ^= v;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

MarkovModel MarkovModel::train(std::span<const TokenSequence> corpus, int order, double alpha) {
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "Markov order must be >= 1");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "smoothing alpha must be >= 0");
  const bool any_tokens = std::any_of(corpus.begin(), corpus.end(),
                                      [](const TokenSequence& s) { return !s.empty(); });
  if (!any_tokens) throw Error(ErrorCode::kEmptyCorpus, "training corpus has no tokens");

  MarkovModel model;
  model.order_ = order;
  model.alpha_ = alpha;
  model.vocab_.emplace_back(kUnknownToken);
  model.ids_.emplace(kUnknownToken, 0);

  std::string fingerprint_input = "order=" + std::to_string(order) +
                                  ";alpha=" + detail::format_double(alpha) + "\n";
  using Counts = std::map<std::uint32_t, std::uint64_t>;
  std::vector<std::unordered_map<std::vector<std::uint32_t>, Counts, VectorHash>> building(
      static_cast<std::size_t>(order) + 1);

  for (const auto& sequence : corpus) {
    std::vector<std::uint32_t> ids;
    ids.reserve(sequence.size());
    for (const auto& token : sequence) {
      auto [it, inserted] = model.ids_.try_emplace(token, static_cast<std::uint32_t>(model.vocab_.size()));
      if (inserted) model.vocab_.push_back(token);
      ids.push_back(it->second);
    }
    fingerprint_input += detokenize(sequence);
    fingerprint_input.push_back('\n');

    for (std::size_t t = 1; t < ids.size(); ++t) {
      const std::size_t longest = std::min<std::size_t>(static_cast<std::size_t>(order), t);
      for (std::size_t len = 0; len <= longest; ++len) {
        std::vector<std::uint32_t> key(ids.begin() + static_cast<std::ptrdiff_t>(t - len),
                                       ids.begin() + static_cast<std::ptrdiff_t>(t));
        ++building[len][std::move(key)][ids[t]];
      }
    }
  }

  model.tables_.resize(building.size());
  for (std::size_t len = 0; len < building.size(); ++len) {
    for (auto& [key, counts] : building[len]) {
      Node node;
      node.successors.reserve(counts.size());
      for (const auto& [token, count] : counts) {
        node.successors.push_back({token, count});
        node.total += count;
      }
      model.tables_[len].emplace(key, std::move(node));
    }
  }
  model.fingerprint_ = detail::sha256_hex(fingerprint_input);
  return model;
}

std::uint32_t MarkovModel::lookup(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? 0 : it->second;
}

bool MarkovModel::has_transitions() const {
  return !tables_.empty() && !tables_[0].empty();
}

std::vector<std::uint32_t> MarkovModel::encode(TokenSpan tokens) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(lookup(token));
  return ids;
}

const MarkovModel::Node* MarkovModel::context_node(std::span<const std::uint32_t> history) const {
  const std::size_t longest = std::min<std::size_t>(static_cast<std::size_t>(order_), history.size());
  std::vector<std::uint32_t> key;
  for (std::size_t len = longest + 1; len-- > 0;) {
    if (len >= tables_.size()) continue;
    key.assign(history.end() - static_cast<std::ptrdiff_t>(len), history.end());
    auto it = tables_[len].find(key);
    if (it != tables_[len].end() && it->second.total > 0) return &it->second;
  }
  return nullptr;
}

const MarkovModel::Node& MarkovModel::require_node(std::span<const std::uint32_t> history) const {
  const Node* node = context_node(history);
  if (node == nullptr) throw Error(ErrorCode::kNoTransitions, "no observed context to continue from");
  return *node;
}

double MarkovModel::probability(const Node* node, std::uint32_t token) const {
  const double vocab = static_cast<double>(vocab_.size());
  std::uint64_t count = 0;
  auto it = std::lower_bound(node->successors.begin(), node->successors.end(), token,
                             [](const Successor& s, std::uint32_t t) { return s.token < t; });
  if (it != node->successors.end() && it->token == token) count = it->count;
  return (static_cast<double>(count) + alpha_) / (static_cast<double>(node->total) + alpha_ * vocab);
}

std::vector<double> MarkovModel::distribution(std::span<const std::uint32_t> history) const {
  const Node& node = require_node(history);
  std::vector<double> probs(vocab_.size());
  for (std::uint32_t v = 0; v < probs.size(); ++v) probs[v] = probability(&node, v);
  return probs;
}

Continuation MarkovModel::generate(TokenSpan prompt, const GenerationParams& params) const {
  params.validate();
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt must be non-empty");
  if (!params.seed) throw Error(ErrorCode::kInvalidArgument, "Markov generation requires a seed");
  if (!has_transitions()) throw Error(ErrorCode::kNoTransitions, "model has no transitions");

  std::mt19937_64 rng(*params.seed);
  std::vector<std::uint32_t> history = encode(prompt);
  const double vocab = static_cast<double>(vocab_.size());
  const double temperature = params.temperature;

  Continuation out;
  std::vector<double> logprobs;
  out.tokens.reserve(static_cast<std::size_t>(params.max_tokens));
  logprobs.reserve(static_cast<std::size_t>(params.max_tokens));
  std::vector<double> scaled;

  for (int step = 0; step < params.max_tokens; ++step) {
    const Node& node = require_node(history);
    const double denom = static_cast<double>(node.total) + alpha_ * vocab;
    const std::size_t unseen = vocab_.size() - node.successors.size();
    const bool smooth = alpha_ > 0.0 && unseen > 0;
    std::uint32_t chosen = 0;
    double logprob = 0.0;

    if (temperature == 0.0) {
      // Greedy; the limit distribution is uniform over the maximal tokens.
      std::uint64_t best = 0;
      std::size_t ties = 0;
      for (const auto& s : node.successors) {
        if (s.count > best) {
          best = s.count;
          chosen = s.token;
          ties = 1;
        } else if (s.count == best) {
          ++ties;
        }
      }
      logprob = -std::log(static_cast<double>(ties));
    } else {
      scaled.resize(node.successors.size());
      const double log_unseen = smooth ? std::log(alpha_ / denom) / temperature
                                       : -std::numeric_limits<double>::infinity();
      double top = log_unseen;
      for (std::size_t i = 0; i < node.successors.size(); ++i) {
        const double p = (static_cast<double>(node.successors[i].count) + alpha_) / denom;
        scaled[i] = std::log(p) / temperature;
        top = std::max(top, scaled[i]);
      }
      double z = 0.0;
      for (double& w : scaled) {
        w = std::exp(w - top);
        z += w;
      }
      const double unseen_each = smooth ? std::exp(log_unseen - top) : 0.0;
      const double unseen_mass = unseen_each * static_cast<double>(unseen);
      z += unseen_mass;

      double draw = detail::uniform_unit(rng) * z;
      std::size_t pick = scaled.size();
      for (std::size_t i = 0; i < scaled.size(); ++i) {
        if (draw < scaled[i]) {
          pick = i;
          break;
        }
        draw -= scaled[i];
      }
      if (pick == scaled.size() && unseen_mass == 0.0) pick = scaled.size() - 1;  // rounding
      if (pick < scaled.size()) {
        chosen = node.successors[pick].token;
        logprob = std::log(scaled[pick] / z);
      } else {
        do {
          chosen = static_cast<std::uint32_t>(detail::uniform_below(rng, vocab_.size()));
        } while (is_successor(node, chosen));
        logprob = std::log(unseen_each / z);
      }
    }

    history.push_back(chosen);
    out.tokens.push_back(vocab_[chosen]);
    logprobs.push_back(logprob);
  }

  out.text = detokenize(out.tokens);
  if (params.want_logprobs) {
    out.sum_logprob = std::accumulate(logprobs.begin(), logprobs.end(), 0.0);
    out.token_logprobs = std::move(logprobs);
  }
  return out;
}

std::vector<double> MarkovModel::score(TokenSpan prompt, TokenSpan continuation) const {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "prompt must be non-empty");
  std::vector<double> out;
  out.reserve(continuation.size());
  if (continuation.empty()) return out;
  std::vector<std::uint32_t> history = encode(prompt);
  for (const auto& token : continuation) {
    const std::uint32_t id = lookup(token);
    out.push_back(std::log(probability(&require_node(history), id)));
    history.push_back(id);
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> MarkovModel::contexts() const {
  std::vector<std::vector<std::uint32_t>> keys;
  for (const auto& table : tables_) {
    for (const auto& [key, node] : table) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

MarkovBackend::MarkovBackend(std::shared_ptr<const MarkovModel> model, std::string name)
    : model_(std::move(model)), name_(std::move(name)) {
  if (!model_) throw Error(ErrorCode::kInvalidArgument, "null Markov model");
}

std::string MarkovBackend::id() const {
  return (name_.empty() ? std::string("markov") : name_) + ":" + model_->fingerprint().substr(0, 16);
}

Generation MarkovBackend::generate(const std::string& prompt, const GenerationParams& params,
                                   std::span<const std::size_t> sample_indices) {
  if (!params.seed) throw Error(ErrorCode::kInvalidArgument, "Markov generation requires a seed");
  const TokenSequence prompt_tokens = tokenize(compose_prompt(params, prompt));
  Generation generation;
  generation.continuations.reserve(sample_indices.size());
  for (std::size_t index : sample_indices) {
    GenerationParams sample = params;
    sample.seed = derive_seed(*params.seed, index);
    generation.continuations.push_back(model_->generate(prompt_tokens, sample));
  }
  return generation;
}

std::vector<double> MarkovBackend::score_continuation(const std::string& prompt,
                                                      TokenSpan continuation) {
  return model_->score(tokenize(prompt), continuation);
}

}  // namespace tailprobe
