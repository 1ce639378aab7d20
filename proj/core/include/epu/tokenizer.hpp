#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace epu {

/// Splits text into lowercase tokens. A token is a maximal run of Unicode alphanumeric
/// code points; everything else (punctuation, whitespace, malformed UTF-8) separates.
std::vector<std::string> tokenize(std::string_view text);

/// Streaming form of tokenize() that reuses one output buffer.
///
///   TokenScanner scan(text);
///   std::string tok;
///   while (scan.next(tok)) { ... }
class TokenScanner {
 public:
  explicit TokenScanner(std::string_view text) : text_(text) {}

  bool next(std::string& token);

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

/// Joins tokens with single spaces (inverse of tokenize() on tokenizer output).
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace epu
