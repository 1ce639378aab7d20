#include "epu/lexicon.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "epu/error.hpp"
#include "epu/tokenizer.hpp"

namespace epu {

KeywordBank::KeywordBank(std::string name, std::vector<Phrase> phrases) : name_(std::move(name)) {
  if (phrases.empty()) throw DataError(fmt::format("keyword bank '{}' has no phrases", name_));
  for (const auto& p : phrases) {
    if (p.empty() || tokenize(join_tokens(p)) != p) {
      throw DataError(fmt::format("keyword bank '{}': phrase '{}' is not in tokenized form", name_,
                                  fmt::join(p, " ")));
    }
  }
  std::sort(phrases.begin(), phrases.end());
  phrases.erase(std::unique(phrases.begin(), phrases.end()), phrases.end());
  phrases_ = std::move(phrases);
}

KeywordBank KeywordBank::from_strings(std::string name, const std::vector<std::string>& phrases) {
  std::vector<Phrase> tokenized;
  tokenized.reserve(phrases.size());
  for (const auto& p : phrases) {
    auto toks = tokenize(p);
    if (toks.empty()) {
      throw DataError(fmt::format("keyword bank '{}': phrase '{}' has no tokens", name, p));
    }
    tokenized.push_back(std::move(toks));
  }
  return KeywordBank(std::move(name), std::move(tokenized));
}

bool KeywordBank::contains(const Phrase& phrase) const {
  return std::binary_search(phrases_.begin(), phrases_.end(), phrase);
}

MeasurementConfig::MeasurementConfig(std::string label, std::vector<KeywordBank> banks)
    : label_(std::move(label)), banks_(std::move(banks)) {
  if (banks_.empty()) throw DataError(fmt::format("measurement '{}' lists no banks", label_));
  if (banks_.size() > 64) throw DataError(fmt::format("measurement '{}': at most 64 banks", label_));
  std::set<std::string> names;
  for (const auto& b : banks_) {
    if (!names.insert(b.name()).second) {
      throw DataError(fmt::format("measurement '{}' repeats bank '{}'", label_, b.name()));
    }
  }
}

bool bank_matches(std::span<const std::string> tokens, const KeywordBank& bank) {
  for (const auto& phrase : bank.phrases()) {
    if (phrase.size() > tokens.size()) continue;
    for (std::size_t start = 0; start + phrase.size() <= tokens.size(); ++start) {
      if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(start))) {
        return true;
      }
    }
  }
  return false;
}

int classify_keyword(const Document& doc, const MeasurementConfig& config) {
  for (const auto& bank : config.banks()) {
    if (!bank_matches(doc.tokens, bank)) return 0;
  }
  return 1;
}

KeywordMatcher::KeywordMatcher(const MeasurementConfig& config) : bank_count_(config.banks().size()) {
  full_mask_ = bank_count_ == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bank_count_) - 1);

  for (const auto& bank : config.banks()) {
    for (const auto& phrase : bank.phrases()) {
      for (const auto& tok : phrase) alphabet_.try_emplace(tok, static_cast<std::uint32_t>(alphabet_.size()));
    }
  }
  alphabet_size_ = alphabet_.size();
  for (const auto& [tok, _] : alphabet_) {
    length_filter_[static_cast<unsigned char>(tok.front())] |= std::uint32_t{1} << std::min<std::size_t>(tok.size(), 31);
  }

  // Trie with sparse children first; transitions are resolved into delta_ afterwards.
  constexpr std::uint32_t kNone = UINT32_MAX;
  std::vector<std::vector<std::uint32_t>> children(1, std::vector<std::uint32_t>(alphabet_size_, kNone));
  outputs_.assign(1, 0);
  for (std::size_t b = 0; b < bank_count_; ++b) {
    for (const auto& phrase : config.banks()[b].phrases()) {
      std::uint32_t state = 0;
      for (const auto& tok : phrase) {
        const std::uint32_t sym = alphabet_.find(tok)->second;
        if (children[state][sym] == kNone) {
          children[state][sym] = static_cast<std::uint32_t>(children.size());
          children.emplace_back(alphabet_size_, kNone);
          outputs_.push_back(0);
        }
        state = children[state][sym];
      }
      outputs_[state] |= std::uint64_t{1} << b;
    }
  }

  const std::size_t n_states = children.size();
  std::vector<std::uint32_t> fail(n_states, 0);
  delta_.assign(n_states * alphabet_size_, 0);
  std::deque<std::uint32_t> queue;
  for (std::size_t s = 0; s < alphabet_size_; ++s) {
    const std::uint32_t child = children[0][s];
    if (child != kNone) {
      delta_[s] = child;
      queue.push_back(child);
    }
  }
  while (!queue.empty()) {
    const std::uint32_t state = queue.front();
    queue.pop_front();
    outputs_[state] |= outputs_[fail[state]];
    for (std::size_t s = 0; s < alphabet_size_; ++s) {
      const std::uint32_t child = children[state][s];
      const std::uint32_t via_fail = delta_[fail[state] * alphabet_size_ + s];
      if (child != kNone) {
        fail[child] = via_fail;
        delta_[state * alphabet_size_ + s] = child;
        queue.push_back(child);
      } else {
        delta_[state * alphabet_size_ + s] = via_fail;
      }
    }
  }
}

std::uint32_t KeywordMatcher::step(std::uint32_t state, std::string_view token) const {
  if (token.empty() ||
      !(length_filter_[static_cast<unsigned char>(token.front())] & (std::uint32_t{1} << std::min<std::size_t>(token.size(), 31)))) {
    return 0;
  }
  const auto it = alphabet_.find(token);
  if (it == alphabet_.end()) return 0;  // no phrase contains this token
  return delta_[state * alphabet_size_ + it->second];
}

std::uint64_t KeywordMatcher::match_mask(std::span<const std::string> tokens) const {
  std::uint64_t mask = 0;
  std::uint32_t state = 0;
  for (const auto& tok : tokens) {
    state = step(state, tok);
    mask |= outputs_[state];
    if (mask == full_mask_) break;
  }
  return mask;
}

std::uint64_t KeywordMatcher::match_mask_text(std::string_view text) const {
  std::uint64_t mask = 0;
  std::uint32_t state = 0;
  TokenScanner scanner(text);
  std::string tok;
  while (scanner.next(tok)) {
    state = step(state, tok);
    mask |= outputs_[state];
    if (mask == full_mask_) break;
  }
  return mask;
}

std::vector<KeywordBank> load_keyword_banks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open keyword config '{}'", path.string()));
  const auto doc = nlohmann::ordered_json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw DataError(fmt::format("keyword config '{}' is not a JSON object", path.string()));
  }
  std::vector<KeywordBank> banks;
  for (const auto& [name, list] : doc.items()) {
    if (!list.is_array()) {
      throw DataError(fmt::format("keyword config '{}': bank '{}' is not a list", path.string(), name));
    }
    std::vector<std::string> phrases;
    for (const auto& p : list) {
      if (!p.is_string()) {
        throw DataError(fmt::format("keyword config '{}': bank '{}' has a non-string phrase",
                                    path.string(), name));
      }
      phrases.push_back(p.get<std::string>());
    }
    banks.push_back(KeywordBank::from_strings(name, phrases));
  }
  return banks;
}

void save_keyword_banks(const std::vector<KeywordBank>& banks, const std::filesystem::path& path) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& bank : banks) {
    auto& list = doc[bank.name()] = nlohmann::ordered_json::array();
    for (const auto& phrase : bank.phrases()) list.push_back(join_tokens(phrase));
  }
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << doc.dump(2) << '\n';
}

const KeywordBank& find_bank(const std::vector<KeywordBank>& banks, std::string_view name) {
  for (const auto& b : banks) {
    if (b.name() == name) return b;
  }
  throw NotFoundError(fmt::format("keyword bank '{}' not found", name));
}

MeasurementConfig key_org(const std::vector<KeywordBank>& banks) {
  return MeasurementConfig("KeyOrg", {find_bank(banks, "economy"), find_bank(banks, "uncertainty"),
                                      find_bank(banks, "policy")});
}

MeasurementConfig key_eu(const std::vector<KeywordBank>& banks) {
  return MeasurementConfig("KeyEU", {find_bank(banks, "economy"), find_bank(banks, "uncertainty")});
}

}  // namespace epu
