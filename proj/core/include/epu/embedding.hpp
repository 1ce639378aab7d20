#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "epu/diagnostics.hpp"
#include "epu/lexicon.hpp"

namespace epu {

/// Word vectors, stored unit-normalized for cosine queries. Zero-norm vectors are dropped.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension);

  /// Text format: one word per line followed by D decimal floats. The dimension comes from
  /// the first vector line; a leading "count dim" header line (word2vec style) is skipped.
  static EmbeddingTable load(const std::filesystem::path& path, Diagnostics* diag = nullptr);

  /// Returns false (and stores nothing) for a zero-norm vector or an already present word.
  /// Throws DataError on a dimension mismatch or non-finite component.
  bool add(std::string word, std::span<const float> vector);

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view word) const;

  const std::string& word(std::size_t row) const { return words_[row]; }
  std::span<const float> unit_vector(std::size_t row) const {
    return {unit_.data() + row * dimension_, dimension_};
  }
  std::size_t row_of(std::string_view word) const;  // throws NotFoundError

 private:
  std::size_t dimension_;
  std::vector<std::string> words_;
  std::vector<float> unit_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// The k words closest to `word` by cosine distance, nearest first; ties broken
/// lexicographically. Throws NotFoundError for an unknown word and std::invalid_argument
/// when k is 0 or exceeds the number of other words.
std::vector<std::string> nearest_neighbors(std::string_view word, const EmbeddingTable& table,
                                           std::size_t k);

/// bank plus the k nearest neighbors of every single-token phrase, minus `removal`.
/// Multi-token phrases pass through unexpanded. k = 0 returns the bank unchanged.
KeywordBank expand_bank(const KeywordBank& bank, const EmbeddingTable& table, std::size_t k,
                        const std::set<std::string>& removal);

}  // namespace epu
