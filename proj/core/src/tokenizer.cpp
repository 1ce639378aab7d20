#include "epu/tokenizer.hpp"

#include "unicode.hpp"

namespace epu {
namespace {

constexpr bool ascii_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

constexpr char ascii_lower(unsigned char c) {
  return static_cast<char>((c >= 'A' && c <= 'Z') ? c + 32 : c);
}

}  // namespace

bool TokenScanner::next(std::string& token) {
  token.clear();
  const std::size_t n = text_.size();
  while (pos_ < n) {
    const auto c = static_cast<unsigned char>(text_[pos_]);
    if (c < 0x80) {
      if (ascii_alnum(c)) {
        token.push_back(ascii_lower(c));
      } else if (!token.empty()) {
        ++pos_;
        return true;
      }
      ++pos_;
      continue;
    }
    std::size_t after = pos_;
    const char32_t cp = unicode::decode(text_, after);
    if (unicode::is_alnum(cp)) {
      unicode::append_utf8(token, unicode::to_lower(cp));
      pos_ = after;
    } else {
      pos_ = after;
      if (!token.empty()) return true;
    }
  }
  return !token.empty();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  TokenScanner scanner(text);
  std::string tok;
  while (scanner.next(tok)) tokens.push_back(tok);
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace epu
