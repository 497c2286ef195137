#include "tailprobe/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include <cmath>

#include "tailprobe/error.hpp"

namespace tailprobe {

std::string_view to_string(Label label) { return label == Label::kAi ? "ai" : "human"; }

std::optional<Label> parse_label(std::string_view text) {
  if (text == "ai") return Label::kAi;
  if (text == "human") return Label::kHuman;
  return std::nullopt;
}

namespace {

icu::UnicodeString normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kInvalidArgument, "ICU NFC normalizer unavailable");
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::kInvalidArgument, "NFC normalization failed");
  normalized.toLower(icu::Locale::getRoot());
  return normalized;
}

void emit_token(const icu::UnicodeString& text, int32_t begin, int32_t end, TokenSequence& out) {
  // Trim punctuation code points from both ends.
  while (begin < end) {
    UChar32 c = text.char32At(begin);
    if (!u_ispunct(c)) break;
    begin = text.moveIndex32(begin, 1);
  }
  while (end > begin) {
    int32_t last = text.moveIndex32(end, -1);
    if (!u_ispunct(text.char32At(last))) break;
    end = last;
  }
  if (begin >= end) return;
  std::string utf8;
  text.tempSubStringBetween(begin, end).toUTF8String(utf8);
  out.push_back(std::move(utf8));
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  if (text.empty()) return tokens;
  const icu::UnicodeString normalized = normalize(text);
  const int32_t length = normalized.length();
  int32_t start = -1;
  for (int32_t i = 0; i < length;) {
    const UChar32 c = normalized.char32At(i);
    const int32_t next = normalized.moveIndex32(i, 1);
    if (u_isUWhiteSpace(c)) {
      if (start >= 0) emit_token(normalized, start, i, tokens);
      start = -1;
    } else if (start < 0) {
      start = i;
    }
    i = next;
  }
  if (start >= 0) emit_token(normalized, start, length, tokens);
  return tokens;
}

std::string detokenize(TokenSpan tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::size_t prefix_length(std::size_t length, double gamma) {
  // 0.07 * 100 evaluates to 7.000000000000001; treat products within 1e-9 of an
  // integer as that integer.
  const double exact = gamma * static_cast<double>(length);
  return static_cast<std::size_t>(std::ceil(exact - 1e-9));
}

TruncationSplit truncate(TokenSpan tokens, double gamma, std::size_t min_tokens) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "truncation ratio must lie in (0,1)");
  }
  const std::size_t length = tokens.size();
  if (length < std::max<std::size_t>(min_tokens, 1)) {
    throw Error(ErrorCode::kTooShort, std::to_string(length) + " tokens, need at least " +
                                          std::to_string(min_tokens));
  }
  const std::size_t cut = prefix_length(length, gamma);
  if (cut >= length) {
    throw Error(ErrorCode::kEmptyTail, "prefix of " + std::to_string(cut) + " tokens leaves no tail");
  }
  TruncationSplit split;
  split.gamma = gamma;
  split.prefix.assign(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(cut));
  split.tail.assign(tokens.begin() + static_cast<std::ptrdiff_t>(cut), tokens.end());
  return split;
}

}  // namespace tailprobe
