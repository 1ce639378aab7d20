#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "epu/calendar.hpp"
#include "epu/diagnostics.hpp"

namespace epu {

/// One news article. Immutable once built by make_document() or CorpusReader.
struct Document {
  std::string id;
  std::string outlet;
  Date date;
  std::optional<std::string> dateline;
  std::string text;
  std::vector<std::string> tokens;  // tokenize(text)
};

/// Builds a Document and derives its tokens. Throws DataError on an empty id.
Document make_document(std::string id, std::string outlet, Date date, std::string text,
                       std::optional<std::string> dateline = std::nullopt);

/// Lazy reader over a JSON-Lines corpus (keys: id, outlet, date, text, optional dateline).
///
/// Records that are not valid JSON, miss a required field, carry an invalid date, or repeat
/// an earlier id are skipped and counted. Blank lines are not records.
class CorpusReader {
 public:
  /// Throws DataError when the file cannot be opened.
  explicit CorpusReader(const std::filesystem::path& path, Diagnostics* diag = nullptr);

  std::optional<Document> next();

  std::size_t records() const { return records_; }
  std::size_t skipped() const { return skipped_; }
  std::size_t yielded() const { return records_ - skipped_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  Diagnostics* diag_;
  std::unordered_set<std::string> seen_ids_;
  std::size_t line_no_ = 0;
  std::size_t records_ = 0;
  std::size_t skipped_ = 0;
};

inline CorpusReader load_corpus(const std::filesystem::path& path, Diagnostics* diag = nullptr) {
  return CorpusReader(path, diag);
}

/// Lowercases, trims, and collapses internal whitespace runs to one space.
std::string normalize_place_name(std::string_view name);

/// Leading span of all-caps words ("SAN ANTONIO, March 29" -> "san antonio").
///
/// Words are separated by spaces and built from letters and periods; the span ends at the
/// first character outside that alphabet or at the first word containing a lowercase letter.
std::optional<std::string> parse_dateline(std::string_view dateline);

/// The dateline field when present. With text_fallback, documents without one fall back to
/// the first 60 characters of their text.
std::optional<std::string> effective_dateline(const Document& doc, bool text_fallback = false);

/// City names split into US and non-US sets. Names listed under both go to US only.
class Gazetteer {
 public:
  Gazetteer() = default;

  /// Two-column CSV with a header row: name,country_code.
  static Gazetteer load(const std::filesystem::path& path, Diagnostics* diag = nullptr);

  /// Pairs of (city name, ISO country code).
  static Gazetteer from_entries(const std::vector<std::pair<std::string, std::string>>& entries);

  bool is_us(std::string_view normalized_name) const;
  bool is_non_us(std::string_view normalized_name) const;

  const std::unordered_set<std::string>& us_cities() const { return us_; }
  const std::unordered_set<std::string>& non_us_cities() const { return non_us_; }

 private:
  std::unordered_set<std::string> us_;
  std::unordered_set<std::string> non_us_;
};

enum class FilterDecision { keep, discard };

/// Discards only documents whose dateline names a known non-US city. Without text_fallback a
/// document lacking a dateline is always kept.
FilterDecision us_filter(const Document& doc, const Gazetteer& gazetteer,
                         bool text_fallback = false);

}  // namespace epu
