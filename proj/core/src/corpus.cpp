#include "epu/corpus.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "epu/csv.hpp"
#include "epu/error.hpp"
#include "epu/tokenizer.hpp"
#include "unicode.hpp"

namespace epu {
namespace {

constexpr std::size_t kDatelineFallbackChars = 60;

std::optional<std::string> string_field(const nlohmann::json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

Document make_document(std::string id, std::string outlet, Date date, std::string text,
                       std::optional<std::string> dateline) {
  if (id.empty()) throw DataError("document id must be non-empty");
  Document doc{std::move(id), std::move(outlet), date, std::move(dateline), std::move(text), {}};
  doc.tokens = tokenize(doc.text);
  return doc;
}

CorpusReader::CorpusReader(const std::filesystem::path& path, Diagnostics* diag)
    : path_(path), in_(path), diag_(diag) {
  if (!in_) throw DataError(fmt::format("cannot open corpus file '{}'", path.string()));
}

std::optional<Document> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++records_;

    auto skip = [&](std::string_view why) {
      ++skipped_;
      note(diag_, fmt::format("{}:{}: skipped record: {}", path_.string(), line_no_, why));
    };

    const auto obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      skip("not a JSON object");
      continue;
    }
    auto id = string_field(obj, "id");
    auto outlet = string_field(obj, "outlet");
    auto date_text = string_field(obj, "date");
    auto text = string_field(obj, "text");
    if (!id || id->empty()) {
      skip("missing id");
      continue;
    }
    if (!outlet) {
      skip("missing outlet");
      continue;
    }
    if (!date_text) {
      skip("missing date");
      continue;
    }
    if (!text) {
      skip("missing text");
      continue;
    }
    const auto date = parse_date(*date_text);
    if (!date) {
      skip(fmt::format("invalid date '{}'", *date_text));
      continue;
    }
    if (!seen_ids_.insert(*id).second) {
      skip(fmt::format("duplicate id '{}'", *id));
      continue;
    }
    return make_document(std::move(*id), std::move(*outlet), *date, std::move(*text),
                         string_field(obj, "dateline"));
  }
  return std::nullopt;
}

std::string normalize_place_name(std::string_view name) {
  std::string out;
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < name.size()) {
    const char32_t cp = unicode::decode(name, pos);
    if (unicode::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    unicode::append_utf8(out, unicode::to_lower(cp));
  }
  return out;
}

std::optional<std::string> parse_dateline(std::string_view dateline) {
  // Restrict to the leading run of letters, periods, and spaces.
  std::size_t pos = 0;
  std::size_t end = 0;
  while (pos < dateline.size()) {
    std::size_t next = pos;
    const char32_t cp = unicode::decode(dateline, next);
    if (!(unicode::is_alpha(cp) || cp == '.' || cp == ' ' || cp == '\t')) break;
    pos = next;
    end = pos;
  }
  const std::string_view head = dateline.substr(0, end);

  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < head.size()) {
    while (i < head.size() && (head[i] == ' ' || head[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < head.size() && head[j] != ' ' && head[j] != '\t') ++j;
    if (j > i) words.push_back(head.substr(i, j - i));
    i = j;
  }

  std::string span;
  for (const auto word : words) {
    bool has_letter = false;
    bool all_caps = true;
    std::size_t p = 0;
    while (p < word.size()) {
      const char32_t cp = unicode::decode(word, p);
      if (unicode::is_alpha(cp)) {
        has_letter = true;
        if (unicode::is_lower(cp) || !unicode::is_upper(cp)) all_caps = false;
      }
    }
    if (!has_letter || !all_caps) break;
    if (!span.empty()) span.push_back(' ');
    span.append(word);
  }
  if (span.empty()) return std::nullopt;
  return normalize_place_name(span);
}

std::optional<std::string> effective_dateline(const Document& doc, bool text_fallback) {
  if (doc.dateline) return *doc.dateline;
  if (!text_fallback) return std::nullopt;
  std::size_t pos = 0;
  for (std::size_t n = 0; n < kDatelineFallbackChars && pos < doc.text.size(); ++n) {
    unicode::decode(doc.text, pos);
  }
  return doc.text.substr(0, pos);
}

Gazetteer Gazetteer::load(const std::filesystem::path& path, Diagnostics* diag) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open gazetteer '{}'", path.string()));
  CsvReader reader(in);
  if (reader.header().size() < 2) {
    throw DataError(fmt::format("gazetteer '{}' needs a name,country_code header", path.string()));
  }
  const std::size_t name_col = reader.column("name").value_or(0);
  const std::size_t code_col = reader.column("country_code").value_or(1);
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() <= std::max(name_col, code_col) || row[name_col].empty()) {
      note(diag, fmt::format("{}:{}: skipped gazetteer row", path.string(), reader.line_number()));
      continue;
    }
    entries.emplace_back(row[name_col], row[code_col]);
  }
  return from_entries(entries);
}

Gazetteer Gazetteer::from_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
  Gazetteer g;
  for (const auto& [name, code] : entries) {
    auto normalized = normalize_place_name(name);
    if (normalized.empty()) continue;
    const bool us = code.size() == 2 && (code[0] == 'U' || code[0] == 'u') &&
                    (code[1] == 'S' || code[1] == 's');
    (us ? g.us_ : g.non_us_).insert(std::move(normalized));
  }
  for (const auto& name : g.us_) g.non_us_.erase(name);
  return g;
}

bool Gazetteer::is_us(std::string_view normalized_name) const {
  return us_.contains(std::string(normalized_name));
}

bool Gazetteer::is_non_us(std::string_view normalized_name) const {
  return non_us_.contains(std::string(normalized_name));
}

FilterDecision us_filter(const Document& doc, const Gazetteer& gazetteer, bool text_fallback) {
  const auto dateline = effective_dateline(doc, text_fallback);
  if (!dateline) return FilterDecision::keep;
  const auto city = parse_dateline(*dateline);
  if (city && gazetteer.is_non_us(*city)) return FilterDecision::discard;
  return FilterDecision::keep;
}

}  // namespace epu
