#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tailprobe/error.hpp"
#include "tailprobe/text.hpp"

namespace tailprobe {
namespace {

TokenSequence seq(std::initializer_list<const char*> tokens) { return {tokens.begin(), tokens.end()}; }

TokenSequence numbered(std::size_t n) {
  TokenSequence out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("t" + std::to_string(i));
  return out;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::kIo;
}

TEST(Tokenize, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(tokenize("Hello, world!"), seq({"hello", "world"}));
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, KeepsInnerHyphensAndStripsDashes) {
  EXPECT_EQ(tokenize("state-of-the-art Der Blutdruck—"), seq({"state-of-the-art", "der", "blutdruck"}));
}

TEST(Tokenize, KeepsInnerApostrophes) { EXPECT_EQ(tokenize("'Don't' stop."), seq({"don't", "stop"})); }

TEST(Tokenize, ComposesToNfc) {
  // e + combining acute -> U+00E9
  EXPECT_EQ(tokenize("Cafe\xCC\x81"), seq({"caf\xC3\xA9"}));
}

TEST(Tokenize, SplitsOnUnicodeWhitespace) {
  EXPECT_EQ(tokenize("a b c\n\td"), seq({"a", "b", "c", "d"}));
}

TEST(Tokenize, DropsPunctuationOnlyTokens) { EXPECT_EQ(tokenize("-- ... a !?"), seq({"a"})); }

TEST(Tokenize, LowercasesNonAscii) { EXPECT_EQ(tokenize("ÜBER ΑΒΓ"), seq({"über", "αβγ"})); }

TEST(Detokenize, JoinsWithSingleSpaces) {
  EXPECT_EQ(detokenize(seq({"hello", "world"})), "hello world");
  EXPECT_EQ(detokenize(TokenSequence{}), "");
  EXPECT_EQ(detokenize(seq({"a"})), "a");
}

TEST(Truncate, EvenLength) {
  const auto split = truncate(numbered(10), 0.5);
  EXPECT_EQ(split.prefix.size(), 5u);
  EXPECT_EQ(split.tail.size(), 5u);
}

TEST(Truncate, OddLengthRoundsPrefixUp) {
  const auto split = truncate(numbered(7), 0.5);
  EXPECT_EQ(split.prefix.size(), 4u);
  EXPECT_EQ(split.tail.size(), 3u);
}

TEST(Truncate, SmallGammaKeepsOneToken) {
  const auto split = truncate(numbered(10), 0.02);
  EXPECT_EQ(split.prefix.size(), 1u);
  EXPECT_EQ(split.tail.size(), 9u);
}

TEST(Truncate, DecimalGammaDoesNotOvershoot) {
  // 0.07 * 100 is 7.000000000000001 in binary floating point.
  EXPECT_EQ(prefix_length(100, 0.07), 7u);
  EXPECT_EQ(prefix_length(100, 0.29), 29u);
}

TEST(Truncate, RejectsGammaOutsideOpenInterval) {
  EXPECT_EQ(code_of([] { truncate(numbered(10), 0.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { truncate(numbered(10), 1.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { truncate(numbered(10), std::nan("")); }), ErrorCode::kInvalidArgument);
}

TEST(Truncate, TooShortAndEmptyTail) {
  EXPECT_EQ(code_of([] { truncate(numbered(1), 0.5); }), ErrorCode::kTooShort);
  EXPECT_EQ(code_of([] { truncate(numbered(5), 0.5, 6); }), ErrorCode::kTooShort);
  EXPECT_EQ(code_of([] { truncate(numbered(2), 0.99); }), ErrorCode::kEmptyTail);
}

TEST(TextProperty, TruncationPartitionsTokens) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t length = oracle::random_size(rng, 2, 500);
    double gamma = unit(rng);
    if (gamma <= 0.0) continue;
    // ceil(x) counts the non-negative integers strictly below x.
    std::size_t expected = 0;
    while (static_cast<double>(expected) < gamma * static_cast<double>(length)) ++expected;
    const TokenSequence tokens = oracle::random_tokens(rng, length, 50);
    if (expected >= length) {
      EXPECT_THROW(truncate(tokens, gamma), Error);
      continue;
    }
    const auto split = truncate(tokens, gamma);
    ASSERT_EQ(split.prefix.size(), expected) << "L=" << length << " gamma=" << gamma;
    TokenSequence joined = split.prefix;
    joined.insert(joined.end(), split.tail.begin(), split.tail.end());
    ASSERT_EQ(joined, tokens);
    ASSERT_FALSE(split.tail.empty());
    ++checked;
  }
  EXPECT_GT(checked, 1900);
}

TEST(TextProperty, NormalizedTokensRoundTrip) {
  std::mt19937_64 rng(12);
  const std::vector<std::string> pieces = {"ab", "x", "café", "don't", "state-of", "z9", "ü"};
  for (int trial = 0; trial < 500; ++trial) {
    TokenSequence tokens;
    const std::size_t n = oracle::random_size(rng, 0, 30);
    for (std::size_t i = 0; i < n; ++i) {
      std::string token = pieces[oracle::random_size(rng, 0, pieces.size() - 1)];
      if (oracle::random_size(rng, 0, 1) == 1) token += pieces[oracle::random_size(rng, 0, pieces.size() - 1)];
      tokens.push_back(token);
    }
    ASSERT_EQ(tokenize(detokenize(tokens)), tokens);
  }
}

TEST(TextProperty, TokenizeIsIdempotent) {
  std::mt19937_64 rng(13);
  const std::vector<std::string> alphabet = {"A", "b", "É", "é", ",", ".", "-", "'", " ", " ",
                                             "—", "\n", "!", "Σ", "7", "\"", "(", ")"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::string text;
    const std::size_t n = oracle::random_size(rng, 0, 60);
    for (std::size_t i = 0; i < n; ++i) text += alphabet[oracle::random_size(rng, 0, alphabet.size() - 1)];
    const TokenSequence once = tokenize(text);
    for (const auto& token : once) {
      ASSERT_FALSE(token.empty());
      ASSERT_EQ(token.find(' '), std::string::npos);
    }
    ASSERT_EQ(tokenize(detokenize(once)), once) << text;
  }
}

TEST(Label, ParsesBothNames) {
  EXPECT_EQ(parse_label("ai"), Label::kAi);
  EXPECT_EQ(parse_label("human"), Label::kHuman);
  EXPECT_FALSE(parse_label("robot"));
  EXPECT_EQ(to_string(Label::kAi), "ai");
}

}  // namespace
}  // namespace tailprobe
