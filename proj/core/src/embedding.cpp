#include "epu/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "epu/error.hpp"
#include "epu/tokenizer.hpp"

namespace epu {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) parts.push_back(line.substr(i, j - i));
    i = j;
  }
  return parts;
}

bool parse_float(std::string_view s, float& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool is_count_header(const std::vector<std::string_view>& parts) {
  if (parts.size() != 2) return false;
  for (auto p : parts) {
    if (p.empty() || !std::all_of(p.begin(), p.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return false;
    }
  }
  return true;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw std::invalid_argument("embedding dimension must be positive");
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, Diagnostics* diag) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open embedding file '{}'", path.string()));
  std::string line;
  std::size_t line_no = 0;
  std::optional<EmbeddingTable> table;
  std::vector<float> values;
  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto parts = split_ws(line);
    if (parts.empty()) continue;
    if (!table && line_no == 1 && is_count_header(parts)) continue;
    if (parts.size() < 2) {
      throw DataError(fmt::format("{}:{}: expected a word followed by floats", path.string(), line_no));
    }
    if (!table) table.emplace(parts.size() - 1);
    if (parts.size() - 1 != table->dimension()) {
      throw DataError(fmt::format("{}:{}: expected {} values, found {}", path.string(), line_no,
                                  table->dimension(), parts.size() - 1));
    }
    values.resize(table->dimension());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!parse_float(parts[i + 1], values[i])) {
        throw DataError(fmt::format("{}:{}: bad number '{}'", path.string(), line_no, parts[i + 1]));
      }
    }
    if (!table->add(std::string(parts[0]), values)) ++dropped;
  }
  if (!table) throw DataError(fmt::format("embedding file '{}' is empty", path.string()));
  if (dropped > 0) {
    note(diag, fmt::format("{}: dropped {} zero-norm or duplicate vectors", path.string(), dropped));
  }
  return std::move(*table);
}

bool EmbeddingTable::add(std::string word, std::span<const float> vector) {
  if (vector.size() != dimension_) {
    throw DataError(fmt::format("embedding for '{}' has {} values, expected {}", word, vector.size(),
                                dimension_));
  }
  double norm2 = 0.0;
  for (float v : vector) {
    if (!std::isfinite(v)) throw DataError(fmt::format("embedding for '{}' is not finite", word));
    norm2 += static_cast<double>(v) * v;
  }
  if (norm2 == 0.0 || index_.contains(word)) return false;
  const double inv = 1.0 / std::sqrt(norm2);
  for (float v : vector) unit_.push_back(static_cast<float>(v * inv));
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  return true;
}

bool EmbeddingTable::contains(std::string_view word) const { return index_.contains(std::string(word)); }

std::size_t EmbeddingTable::row_of(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) throw NotFoundError(fmt::format("word '{}' not in embedding table", word));
  return it->second;
}

std::vector<std::string> nearest_neighbors(std::string_view word, const EmbeddingTable& table,
                                           std::size_t k) {
  const std::size_t query = table.row_of(word);
  if (k == 0) throw std::invalid_argument("nearest_neighbors: k must be at least 1");
  if (k > table.size() - 1) {
    throw std::invalid_argument(fmt::format("nearest_neighbors: k={} exceeds the {} other words", k,
                                            table.size() - 1));
  }
  const auto q = table.unit_vector(query);
  struct Candidate {
    double distance;
    std::size_t row;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(table.size() - 1);
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (r == query) continue;
    const auto v = table.unit_vector(r);
    double dot = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) dot += static_cast<double>(q[i]) * v[i];
    candidates.push_back({1.0 - dot, r});
  }
  const auto closer = [&](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return table.word(a.row) < table.word(b.row);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end(), closer);
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(table.word(candidates[i].row));
  return out;
}

KeywordBank expand_bank(const KeywordBank& bank, const EmbeddingTable& table, std::size_t k,
                        const std::set<std::string>& removal) {
  if (k == 0) return bank;
  std::vector<Phrase> phrases = bank.phrases();
  for (const auto& phrase : bank.phrases()) {
    if (phrase.size() != 1) continue;
    if (!table.contains(phrase[0])) {
      throw NotFoundError(fmt::format("bank '{}': seed '{}' not in embedding table", bank.name(),
                                      phrase[0]));
    }
    for (auto& neighbor : nearest_neighbors(phrase[0], table, k)) {
      // Neighbors that do not survive tokenization intact (punctuation, case) become phrases.
      auto toks = tokenize(neighbor);
      if (!toks.empty()) phrases.push_back(std::move(toks));
    }
  }
  std::erase_if(phrases, [&](const Phrase& p) { return removal.contains(join_tokens(p)); });
  if (phrases.empty()) {
    throw DataError(fmt::format("bank '{}' is empty after expansion and removal", bank.name()));
  }
  return KeywordBank(bank.name(), std::move(phrases));
}

}  // namespace epu
