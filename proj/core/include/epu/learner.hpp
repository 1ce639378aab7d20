#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "epu/diagnostics.hpp"

namespace epu {

/// Token -> column map with dense indices assigned in lexicographic token order.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Keeps tokens that occur in at least min_df documents. Throws DataError on an empty
  /// corpus or min_df == 0; an empty result is allowed (fitting on it fails later).
  static Vocabulary build(std::span<const std::vector<std::string>> docs, std::size_t min_df);

  /// From an explicit token list (e.g. a saved model). Sorted and deduplicated.
  static Vocabulary from_tokens(std::vector<std::string> tokens, std::size_t min_df);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  std::size_t min_doc_freq() const { return min_df_; }
  const std::string& token(std::size_t index) const { return tokens_[index]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<std::uint32_t> index_of(std::string_view token) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t min_df_ = 1;
};

/// Sparse vector with strictly increasing indices.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  bool operator==(const SparseVector&) const = default;
};

/// Compressed sparse rows with a fixed column count.
class SparseMatrix {
 public:
  explicit SparseMatrix(std::size_t cols) : cols_(cols) {}

  /// Throws DataError on an out-of-range column or non-finite value.
  void add_row(const SparseVector& row);

  std::size_t rows() const { return row_ptr_.size() - 1; }
  std::size_t cols() const { return cols_; }

  std::span<const std::uint32_t> row_indices(std::size_t r) const {
    return {col_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {val_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  /// Rows picked by index, in the given order.
  SparseMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t cols_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
};

/// Raw in-vocabulary token counts; out-of-vocabulary tokens are dropped.
SparseVector featurize(std::span<const std::string> tokens, const Vocabulary& vocab);

/// Mean negative log-likelihood of a logistic model plus l2 * 0.5 * |w|^2 (bias unpenalized).
/// Parameters are packed as [w_0 .. w_{d-1}, b].
class LogisticObjective {
 public:
  LogisticObjective(const SparseMatrix& x, std::span<const int> y, double l2);

  std::size_t dimension() const { return x_.cols() + 1; }

  /// Objective value; writes the gradient when grad is non-empty.
  double evaluate(std::span<const double> params, std::span<double> grad) const;

 private:
  const SparseMatrix& x_;
  std::span<const int> y_;
  double l2_;
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2 = 1.0;
  double train_prevalence = 0.5;
  // Fit report.
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

struct FitOptions {
  double gradient_tolerance = 1e-6;
  int max_iterations = 1000;
  std::size_t history = 10;
};

/// L-BFGS from the zero vector. The optimizer has no stochastic step, so the result is
/// a pure function of (x, y, l2, options); `seed` is carried for interface stability.
/// Throws DataError on fewer than 2 rows, a row/label mismatch, non-binary or single-class
/// labels, or a non-positive l2.
LogisticModel fit_logreg(const SparseMatrix& x, std::span<const int> y, double l2,
                         std::uint64_t seed = 0, const FitOptions& options = {});

double sigmoid(double z);
double predict_proba(const LogisticModel& model, const SparseVector& features);

struct L2Selection {
  double best_l2 = 0.0;
  std::vector<double> grid;
  std::vector<std::optional<double>> mean_accuracy;  // per grid value; nullopt if every fold skipped
};

/// Seeded shuffled k-fold cross-validation; picks the grid value with the highest mean
/// held-out accuracy, ties going to the smallest value. Folds whose training part holds a
/// single class are skipped with a diagnostic.
L2Selection select_l2(const SparseMatrix& x, std::span<const int> y, std::span<const double> grid,
                      std::size_t folds, std::uint64_t seed, Diagnostics* diag = nullptr);

struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  // False when the denominator was zero; the metric is then reported as 0.
  bool precision_defined = true;
  bool recall_defined = true;
};

/// Binary metrics with 1 as the positive class. Throws DataError on empty or mismatched input.
EvalReport evaluate(std::span<const int> predictions, std::span<const int> gold);

/// Vocabulary plus fitted weights.
struct TrainedClassifier {
  Vocabulary vocab;
  LogisticModel model;

  double predict_proba(std::span<const std::string> tokens) const {
    return epu::predict_proba(model, featurize(tokens, vocab));
  }
};

/// Versioned flat text format. Weights use shortest round-trip decimals.
void save_model(const TrainedClassifier& classifier, std::ostream& out);
TrainedClassifier load_model(std::istream& in);

}  // namespace epu
