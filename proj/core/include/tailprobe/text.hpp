#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tailprobe {

enum class Label { kHuman, kAi };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

// One candidate text. `prompt` is the question that produced it, when known.
struct TextSample {
  std::string id;
  std::string text;
  std::optional<Label> label;
  std::optional<std::string> source_model;
  std::optional<std::string> prompt;

  bool operator==(const TextSample&) const = default;
};

// Normalized word tokens: non-empty, lowercase, NFC, no whitespace.
using TokenSequence = std::vector<std::string>;
using TokenSpan = std::span<const std::string>;

struct TruncationSplit {
  double gamma = 0.5;
  TokenSequence prefix;
  TokenSequence tail;

  bool operator==(const TruncationSplit&) const = default;
};

inline constexpr std::size_t kDefaultMinTruncateTokens = 2;

// NFC, lowercase, split on Unicode whitespace, then strip leading and trailing
// punctuation from each token. Tokens left empty are dropped.
TokenSequence tokenize(std::string_view text);

// Joins with single spaces.
std::string detokenize(TokenSpan tokens);

// Prefix keeps the first ceil(gamma * L) tokens.
// Throws kInvalidArgument for gamma outside (0,1), kTooShort when L < min_tokens,
// kEmptyTail when the prefix would swallow the whole sequence.
TruncationSplit truncate(TokenSpan tokens, double gamma,
                         std::size_t min_tokens = kDefaultMinTruncateTokens);

std::size_t prefix_length(std::size_t length, double gamma);

}  // namespace tailprobe
