#include "tailprobe/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>
#include <unordered_map>

#include "tailprobe/error.hpp"

namespace tailprobe {

std::string_view to_string(WeightFunction fn) {
  switch (fn) {
    case WeightFunction::kLogN: return "log_n";
    case WeightFunction::kN: return "n";
    case WeightFunction::kNLogN: return "n_log_n";
    case WeightFunction::kNLog2N: return "n_log2_n";
    case WeightFunction::kNSquared: return "n_sq";
    case WeightFunction::kExpN: return "exp_n";
  }
  return "n_log_n";
}

std::optional<WeightFunction> parse_weight_function(std::string_view name) {
  for (auto fn : {WeightFunction::kLogN, WeightFunction::kN, WeightFunction::kNLogN,
                  WeightFunction::kNLog2N, WeightFunction::kNSquared, WeightFunction::kExpN}) {
    if (to_string(fn) == name) return fn;
  }
  return std::nullopt;
}

bool is_log_based(WeightFunction fn) {
  return fn == WeightFunction::kLogN || fn == WeightFunction::kNLogN ||
         fn == WeightFunction::kNLog2N;
}

void NgramConfig::validate() const {
  if (n0 < 1) throw Error(ErrorCode::kInvalidArgument, "n0 must be >= 1");
  if (n_max < n0) throw Error(ErrorCode::kInvalidArgument, "N must be >= n0");
  if (is_log_based(weight) && n0 < 2) {
    throw Error(ErrorCode::kDomain, std::string(to_string(weight)) + " is not positive for n < 2");
  }
  if (!(exp_cap > 0.0)) throw Error(ErrorCode::kInvalidArgument, "exp cap must be positive");
}

std::set<Ngram> extract_ngrams(TokenSpan tokens, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n-gram order must be >= 1");
  std::set<Ngram> grams;
  const auto order = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    grams.emplace(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                  tokens.begin() + static_cast<std::ptrdiff_t>(i + order));
  }
  return grams;
}

double weight(const NgramConfig& cfg, int n) {
  const double x = static_cast<double>(n);
  if (is_log_based(cfg.weight) && n < 2) {
    throw Error(ErrorCode::kDomain, "log-based weight requires n >= 2");
  }
  switch (cfg.weight) {
    case WeightFunction::kLogN: return std::log(x);
    case WeightFunction::kN: return x;
    case WeightFunction::kNLogN: return x * std::log(x);
    case WeightFunction::kNLog2N: {
      const double l = std::log(x);
      return x * l * l;
    }
    case WeightFunction::kNSquared: return x * x;
    case WeightFunction::kExpN: return std::exp(std::min(x, cfg.exp_cap));
  }
  return 0.0;
}

namespace {

// Token ids local to one scoring call. Tokens absent from the tail get -1 and
// therefore never match anything.
class TailVocabulary {
 public:
  explicit TailVocabulary(TokenSpan tail) {
    ids_.reserve(tail.size());
    tail_ids_.reserve(tail.size());
    for (const auto& token : tail) {
      auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(ids_.size()));
      tail_ids_.push_back(it->second);
    }
  }

  const std::vector<int>& tail_ids() const { return tail_ids_; }

  std::vector<int> encode(TokenSpan tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& token : tokens) {
      auto it = ids_.find(token);
      out.push_back(it == ids_.end() ? -1 : it->second);
    }
    return out;
  }

 private:
  std::unordered_map<std::string_view, int> ids_;
  std::vector<int> tail_ids_;
};

// For every tail position i, the length of the longest run starting at i that
// also starts at some earlier tail position. The n-gram at i is the first
// occurrence of its value iff this is < n.
std::vector<std::size_t> earlier_match_lengths(const std::vector<int>& tail) {
  const std::size_t len = tail.size();
  std::vector<std::size_t> best(len, 0);
  for (std::size_t offset = 1; offset < len; ++offset) {
    std::size_t run = 0;
    for (std::size_t a = len - offset; a-- > 0;) {
      const std::size_t b = a + offset;
      run = tail[a] == tail[b] ? run + 1 : 0;
      best[b] = std::max(best[b], run);
    }
  }
  return best;
}

// For every tail position i, the longest prefix of tail[i..] occurring
// anywhere in `regen`.
std::vector<std::size_t> regen_match_lengths(const std::vector<int>& tail,
                                             const std::vector<int>& regen) {
  const std::size_t lt = tail.size();
  const std::size_t lr = regen.size();
  std::vector<std::size_t> best(lt, 0);
  std::vector<std::size_t> next(lr + 1, 0);
  std::vector<std::size_t> cur(lr + 1, 0);
  for (std::size_t i = lt; i-- > 0;) {
    std::size_t row_best = 0;
    for (std::size_t j = 0; j < lr; ++j) {
      cur[j] = tail[i] == regen[j] ? next[j + 1] + 1 : 0;
      row_best = std::max(row_best, cur[j]);
    }
    best[i] = row_best;
    std::swap(cur, next);
  }
  return best;
}

}  // namespace

ScoreResult bscore(TokenSpan tail, const RegenerationSet& omega, const NgramConfig& cfg) {
  cfg.validate();
  if (omega.regens.empty()) throw Error(ErrorCode::kInvalidArgument, "need at least one regeneration");

  const TailVocabulary vocab(tail);
  const std::vector<int>& tail_ids = vocab.tail_ids();
  const std::vector<std::size_t> earlier = earlier_match_lengths(tail_ids);
  const std::size_t lt = tail_ids.size();
  const int top = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.n_max), lt));

  // Distinct tail n-grams per order.
  std::vector<std::size_t> tail_counts(static_cast<std::size_t>(std::max(top, 0)) + 1, 0);
  for (int n = cfg.n0; n <= top; ++n) {
    const auto order = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + order <= lt; ++i) {
      if (earlier[i] < order) ++tail_counts[order];
    }
  }

  ScoreResult result;
  const double k_count = static_cast<double>(omega.regens.size());
  for (int n = cfg.n0; n <= top; ++n) {
    result.breakdown.per_n[n].tail_ngrams = tail_counts[static_cast<std::size_t>(n)];
  }

  double total = 0.0;
  for (const auto& regen : omega.regens) {
    double partial = 0.0;
    const std::size_t regen_len = regen.size();
    if (regen_len > 0 && lt > 0) {
      const std::vector<std::size_t> reach = regen_match_lengths(tail_ids, vocab.encode(regen));
      for (int n = cfg.n0; n <= top; ++n) {
        const auto order = static_cast<std::size_t>(n);
        const std::size_t tail_count = tail_counts[order];
        if (tail_count == 0) continue;
        std::size_t shared = 0;
        for (std::size_t i = 0; i + order <= lt; ++i) {
          if (earlier[i] < order && reach[i] >= order) ++shared;
        }
        if (shared == 0) continue;
        const double term = weight(cfg, n) * static_cast<double>(shared) /
                            (static_cast<double>(regen_len) * static_cast<double>(tail_count));
        partial += term;
        NgramTerm& entry = result.breakdown.per_n[n];
        entry.intersections += shared;
        entry.weighted += term / k_count;
      }
    }
    result.breakdown.per_regen.push_back(partial);
    total += partial;
  }
  result.score = total / k_count;
  return result;
}

double wscore(const RegenerationSet& omega) {
  return wscore(omega, WScoreVariant::kSequence, 0);
}

double wscore(const RegenerationSet& omega, WScoreVariant variant, std::size_t tail_tokens) {
  if (!omega.tail_logprob) throw Error(ErrorCode::kMissingLogprobs, "tail log-probability absent");
  if (!omega.logprobs) throw Error(ErrorCode::kMissingLogprobs, "regeneration log-probabilities absent");
  const auto& logprobs = *omega.logprobs;
  if (logprobs.empty()) throw Error(ErrorCode::kInvalidArgument, "need at least one regeneration");
  if (logprobs.size() != omega.regens.size() && !omega.regens.empty()) {
    throw Error(ErrorCode::kMissingLogprobs, "one log-probability per regeneration required");
  }

  double tail = *omega.tail_logprob;
  if (variant == WScoreVariant::kPerTokenMean) {
    if (tail_tokens == 0 || omega.regens.size() != logprobs.size()) {
      throw Error(ErrorCode::kInvalidArgument, "per-token variant needs token counts");
    }
    tail /= static_cast<double>(tail_tokens);
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < logprobs.size(); ++k) {
    double regen = logprobs[k];
    if (variant == WScoreVariant::kPerTokenMean) {
      const std::size_t len = omega.regens[k].size();
      regen = len == 0 ? 0.0 : regen / static_cast<double>(len);
    }
    sum += tail - regen;
  }
  return sum / static_cast<double>(logprobs.size());
}

std::vector<EvidenceSpan> extract_evidence(TokenSpan regen, TokenSpan tail, std::size_t min_len,
                                           std::size_t regen_index) {
  if (min_len < 1) throw Error(ErrorCode::kInvalidArgument, "evidence minimum length must be >= 1");
  const TailVocabulary vocab(tail);
  const std::vector<int>& t = vocab.tail_ids();
  const std::vector<int> r = vocab.encode(regen);
  const std::size_t lt = t.size();
  const std::size_t lr = r.size();

  std::vector<EvidenceSpan> spans;
  std::vector<std::size_t> next(lt + 1, 0);
  std::vector<std::size_t> cur(lt + 1, 0);
  for (std::size_t i = lr; i-- > 0;) {
    for (std::size_t j = 0; j < lt; ++j) {
      cur[j] = r[i] >= 0 && r[i] == t[j] ? next[j + 1] + 1 : 0;
      const std::size_t run = cur[j];
      if (run < min_len) continue;
      const bool left_maximal = i == 0 || j == 0 || r[i - 1] != t[j - 1];
      if (!left_maximal) continue;
      EvidenceSpan span;
      span.tokens.assign(tail.begin() + static_cast<std::ptrdiff_t>(j),
                         tail.begin() + static_cast<std::ptrdiff_t>(j + run));
      span.regen_index = regen_index;
      span.pos_in_regen = i;
      span.pos_in_tail = j;
      spans.push_back(std::move(span));
    }
    std::swap(cur, next);
  }
  std::sort(spans.begin(), spans.end(), [](const EvidenceSpan& a, const EvidenceSpan& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    if (a.pos_in_tail != b.pos_in_tail) return a.pos_in_tail < b.pos_in_tail;
    return a.pos_in_regen < b.pos_in_regen;
  });
  return spans;
}

std::vector<EvidenceSpan> extract_evidence(const RegenerationSet& omega, TokenSpan tail,
                                           std::size_t min_len) {
  std::vector<EvidenceSpan> all;
  for (std::size_t k = 0; k < omega.regens.size(); ++k) {
    auto spans = extract_evidence(omega.regens[k], tail, min_len, k);
    all.insert(all.end(), std::make_move_iterator(spans.begin()),
               std::make_move_iterator(spans.end()));
  }
  std::stable_sort(all.begin(), all.end(), [](const EvidenceSpan& a, const EvidenceSpan& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    if (a.regen_index != b.regen_index) return a.regen_index < b.regen_index;
    if (a.pos_in_tail != b.pos_in_tail) return a.pos_in_tail < b.pos_in_tail;
    return a.pos_in_regen < b.pos_in_regen;
  });
  return all;
}

}  // namespace tailprobe
