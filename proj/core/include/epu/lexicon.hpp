#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "epu/corpus.hpp"

namespace epu {

using Phrase = std::vector<std::string>;

/// A named set of keyword phrases, each stored pre-tokenized.
class KeywordBank {
 public:
  /// Throws DataError if phrases is empty or a phrase is not in tokenizer normal form.
  KeywordBank(std::string name, std::vector<Phrase> phrases);

  /// Tokenizes each phrase string ("White House" -> {"white","house"}).
  static KeywordBank from_strings(std::string name, const std::vector<std::string>& phrases);

  const std::string& name() const { return name_; }
  const std::vector<Phrase>& phrases() const { return phrases_; }  // sorted, unique
  std::size_t size() const { return phrases_.size(); }
  bool contains(const Phrase& phrase) const;

 private:
  std::string name_;
  std::vector<Phrase> phrases_;
};

/// A measurement function defined as a conjunction over keyword banks.
class MeasurementConfig {
 public:
  /// Throws DataError on an empty bank list or repeated bank names.
  MeasurementConfig(std::string label, std::vector<KeywordBank> banks);

  const std::string& label() const { return label_; }
  const std::vector<KeywordBank>& banks() const { return banks_; }

 private:
  std::string label_;
  std::vector<KeywordBank> banks_;
};

/// True iff some phrase of the bank occurs as a contiguous token subsequence. Plain scan.
bool bank_matches(std::span<const std::string> tokens, const KeywordBank& bank);

/// 1 iff every bank of the config matches the document.
int classify_keyword(const Document& doc, const MeasurementConfig& config);

/// Multi-pattern matcher over token ids (Aho-Corasick on the token alphabet). Produces the
/// same answers as bank_matches() in one pass over the document and stops early once all
/// banks have matched. Immutable after construction.
class KeywordMatcher {
 public:
  explicit KeywordMatcher(const MeasurementConfig& config);

  /// Bit i set iff bank i matches. At most 64 banks.
  std::uint64_t match_mask(std::span<const std::string> tokens) const;

  /// Tokenizes on the fly; no token vector is materialized.
  std::uint64_t match_mask_text(std::string_view text) const;

  bool matches_all(std::span<const std::string> tokens) const {
    return match_mask(tokens) == full_mask_;
  }
  bool matches_all_text(std::string_view text) const { return match_mask_text(text) == full_mask_; }

  std::size_t bank_count() const { return bank_count_; }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::uint32_t step(std::uint32_t state, std::string_view token) const;

  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> alphabet_;
  std::array<std::uint32_t, 256> length_filter_{};  // first byte -> bit per token length (capped at 31)
  std::vector<std::uint32_t> delta_;    // states x alphabet_size, fully resolved transitions
  std::vector<std::uint64_t> outputs_;  // per state, banks whose phrase ends here (incl. suffixes)
  std::size_t alphabet_size_ = 0;
  std::size_t bank_count_ = 0;
  std::uint64_t full_mask_ = 0;
};

/// Keyword config file: a JSON object mapping bank name to a list of phrases, e.g.
/// {"economy": ["economic", "economy"], "policy": ["white house", ...]}. File order is kept.
std::vector<KeywordBank> load_keyword_banks(const std::filesystem::path& path);

void save_keyword_banks(const std::vector<KeywordBank>& banks, const std::filesystem::path& path);

const KeywordBank& find_bank(const std::vector<KeywordBank>& banks, std::string_view name);

/// KeyOrg: economy AND uncertainty AND policy.
MeasurementConfig key_org(const std::vector<KeywordBank>& banks);
/// KeyEU: economy AND uncertainty.
MeasurementConfig key_eu(const std::vector<KeywordBank>& banks);

}  // namespace epu
