#include "epu/learner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "epu/csv.hpp"
#include "epu/error.hpp"
#include "epu/seed.hpp"

namespace epu {

// ---------------------------------------------------------------- vocabulary

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> docs, std::size_t min_df) {
  if (docs.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  if (min_df == 0) throw DataError("min_df must be at least 1");
  std::unordered_map<std::string, std::size_t> df;
  std::vector<std::string_view> seen;
  for (const auto& doc : docs) {
    seen.assign(doc.begin(), doc.end());
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto tok : seen) ++df[std::string(tok)];
  }
  std::vector<std::string> kept;
  for (auto& [tok, count] : df) {
    if (count >= min_df) kept.push_back(tok);
  }
  return from_tokens(std::move(kept), min_df);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::size_t min_df) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  Vocabulary v;
  v.min_df_ = min_df;
  v.tokens_ = std::move(tokens);
  v.index_.reserve(v.tokens_.size());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    v.index_.emplace(v.tokens_[i], static_cast<std::uint32_t>(i));
  }
  return v;
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------- sparse data

void SparseMatrix::add_row(const SparseVector& row) {
  for (std::size_t i = 0; i < row.nnz(); ++i) {
    if (row.indices[i] >= cols_) {
      throw DataError(fmt::format("feature index {} out of range ({} columns)", row.indices[i], cols_));
    }
    if (!std::isfinite(row.values[i])) throw DataError("non-finite feature value");
  }
  col_.insert(col_.end(), row.indices.begin(), row.indices.end());
  val_.insert(val_.end(), row.values.begin(), row.values.end());
  row_ptr_.push_back(col_.size());
}

SparseMatrix SparseMatrix::select_rows(std::span<const std::size_t> rows) const {
  SparseMatrix out(cols_);
  for (std::size_t r : rows) {
    const auto idx = row_indices(r);
    const auto val = row_values(r);
    out.col_.insert(out.col_.end(), idx.begin(), idx.end());
    out.val_.insert(out.val_.end(), val.begin(), val.end());
    out.row_ptr_.push_back(out.col_.size());
  }
  return out;
}

SparseVector featurize(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& tok : tokens) {
    if (const auto idx = vocab.index_of(tok)) counts[*idx] += 1.0;
  }
  SparseVector v;
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  for (const auto& [i, c] : counts) {
    v.indices.push_back(i);
    v.values.push_back(c);
  }
  return v;
}

// ---------------------------------------------------------------- objective

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_labels(std::span<const int> y) {
  bool has0 = false;
  bool has1 = false;
  for (int v : y) {
    if (v == 0) {
      has0 = true;
    } else if (v == 1) {
      has1 = true;
    } else {
      throw DataError(fmt::format("label {} is not binary", v));
    }
  }
  if (!has0 || !has1) throw DataError("training labels contain a single class");
}

}  // namespace

LogisticObjective::LogisticObjective(const SparseMatrix& x, std::span<const int> y, double l2)
    : x_(x), y_(y), l2_(l2) {
  if (x.rows() != y.size()) {
    throw DataError(fmt::format("{} feature rows but {} labels", x.rows(), y.size()));
  }
}

double LogisticObjective::evaluate(std::span<const double> params, std::span<double> grad) const {
  const std::size_t d = x_.cols();
  const double b = params[d];
  const double n = static_cast<double>(y_.size());
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t r = 0; r < y_.size(); ++r) {
    const auto idx = x_.row_indices(r);
    const auto val = x_.row_values(r);
    double z = b;
    for (std::size_t k = 0; k < idx.size(); ++k) z += params[idx[k]] * val[k];
    loss += softplus(z) - (y_[r] == 1 ? z : 0.0);
    if (want_grad) {
      const double resid = sigmoid(z) - y_[r];
      for (std::size_t k = 0; k < idx.size(); ++k) grad[idx[k]] += resid * val[k];
      grad[d] += resid;
    }
  }
  double penalty = 0.0;
  for (std::size_t j = 0; j < d; ++j) penalty += params[j] * params[j];
  if (want_grad) {
    for (std::size_t j = 0; j < d; ++j) grad[j] = grad[j] / n + l2_ * params[j];
    grad[d] /= n;
  }
  return loss / n + 0.5 * l2_ * penalty;
}

// ---------------------------------------------------------------- fitting

LogisticModel fit_logreg(const SparseMatrix& x, std::span<const int> y, double l2,
                         std::uint64_t /*seed*/, const FitOptions& options) {
  if (y.size() < 2) throw DataError("fit_logreg needs at least two rows");
  if (x.rows() != y.size()) {
    throw DataError(fmt::format("{} feature rows but {} labels", x.rows(), y.size()));
  }
  if (!(l2 > 0.0) || !std::isfinite(l2)) throw DataError("l2 strength must be positive and finite");
  check_labels(y);

  const LogisticObjective objective(x, y, l2);
  const std::size_t dim = objective.dimension();
  std::vector<double> params(dim, 0.0);
  std::vector<double> grad(dim);
  double value = objective.evaluate(params, grad);

  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> direction(dim);
  std::vector<double> alpha(options.history);
  std::vector<double> trial(dim);
  std::vector<double> trial_grad(dim);

  LogisticModel model;
  model.l2 = l2;
  model.train_prevalence =
      static_cast<double>(std::count(y.begin(), y.end(), 1)) / static_cast<double>(y.size());

  int iter = 0;
  double gnorm = norm(grad);
  while (gnorm >= options.gradient_tolerance && iter < options.max_iterations) {
    // Two-loop recursion for the quasi-Newton direction.
    direction = grad;
    const std::size_t m = s_hist.size();
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * dot(s_hist[i], direction);
      for (std::size_t j = 0; j < dim; ++j) direction[j] -= alpha[i] * y_hist[i][j];
    }
    double gamma = 1.0;
    if (m > 0) gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    for (auto& v : direction) v *= gamma;
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * dot(y_hist[i], direction);
      for (std::size_t j = 0; j < dim; ++j) direction[j] += (alpha[i] - beta) * s_hist[i][j];
    }
    for (auto& v : direction) v = -v;

    double slope = dot(grad, direction);
    if (!(slope < 0.0)) {
      // Lost descent; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < dim; ++j) direction[j] = -grad[j];
      slope = -gnorm * gnorm;
    }

    // Backtracking line search with the Armijo condition.
    double step = (m == 0) ? std::min(1.0, 1.0 / gnorm) : 1.0;
    double trial_value = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < dim; ++j) trial[j] = params[j] + step * direction[j];
      trial_value = objective.evaluate(trial, trial_grad);
      if (std::isfinite(trial_value) && trial_value <= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    if (!accepted) {
      if (s_hist.empty()) break;  // steepest descent also failed: at machine precision
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      continue;
    }

    std::vector<double> s(dim);
    std::vector<double> yv(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      s[j] = trial[j] - params[j];
      yv[j] = trial_grad[j] - grad[j];
    }
    const double sy = dot(s, yv);
    params.swap(trial);
    grad.swap(trial_grad);
    value = trial_value;
    gnorm = norm(grad);
    if (sy > 1e-16 * norm(s) * norm(yv)) {
      if (s_hist.size() == options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
    }
  }

  model.weights.assign(params.begin(), params.end() - 1);
  model.bias = params.back();
  model.iterations = iter;
  model.gradient_norm = gnorm;
  model.converged = gnorm < options.gradient_tolerance;
  return model;
}

double predict_proba(const LogisticModel& model, const SparseVector& features) {
  double z = model.bias;
  for (std::size_t k = 0; k < features.nnz(); ++k) {
    if (features.indices[k] < model.weights.size()) z += model.weights[features.indices[k]] * features.values[k];
  }
  return sigmoid(z);
}

// ---------------------------------------------------------------- model selection

L2Selection select_l2(const SparseMatrix& x, std::span<const int> y, std::span<const double> grid,
                      std::size_t folds, std::uint64_t seed, Diagnostics* diag) {
  if (grid.empty()) throw DataError("select_l2: empty grid");
  if (folds < 2) throw DataError("select_l2: at least 2 folds are required");
  if (x.rows() != y.size()) throw DataError("select_l2: row/label count mismatch");
  if (y.size() < folds) throw DataError("select_l2: fewer rows than folds");

  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  // Fold f holds order[fold_begin(f), fold_begin(f+1)); sizes differ by at most one.
  const auto fold_begin = [&](std::size_t f) { return f * y.size() / folds; };

  L2Selection result;
  result.grid.assign(grid.begin(), grid.end());
  result.mean_accuracy.assign(grid.size(), std::nullopt);

  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    std::size_t scored = 0;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> train_rows;
      std::vector<std::size_t> test_rows;
      for (std::size_t i = 0; i < order.size(); ++i) {
        (i >= fold_begin(f) && i < fold_begin(f + 1) ? test_rows : train_rows).push_back(order[i]);
      }
      std::vector<int> train_y;
      for (auto r : train_rows) train_y.push_back(y[r]);
      const auto positives = std::count(train_y.begin(), train_y.end(), 1);
      if (positives == 0 || positives == static_cast<std::ptrdiff_t>(train_y.size())) {
        note(diag, fmt::format("select_l2: fold {} skipped (training part has one class)", f));
        continue;
      }
      const SparseMatrix train_x = x.select_rows(train_rows);
      const LogisticModel model = fit_logreg(train_x, train_y, grid[g], seed);
      std::size_t correct = 0;
      for (auto r : test_rows) {
        SparseVector row;
        const auto idx = x.row_indices(r);
        const auto val = x.row_values(r);
        row.indices.assign(idx.begin(), idx.end());
        row.values.assign(val.begin(), val.end());
        const int pred = predict_proba(model, row) >= 0.5 ? 1 : 0;
        if (pred == y[r]) ++correct;
      }
      sum += static_cast<double>(correct) / static_cast<double>(test_rows.size());
      ++scored;
    }
    if (scored > 0) result.mean_accuracy[g] = sum / static_cast<double>(scored);
  }

  std::optional<std::size_t> best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!result.mean_accuracy[g]) continue;
    if (!best || *result.mean_accuracy[g] > *result.mean_accuracy[*best] ||
        (*result.mean_accuracy[g] == *result.mean_accuracy[*best] && grid[g] < grid[*best])) {
      best = g;
    }
  }
  if (!best) throw DataError("select_l2: every fold was skipped");
  result.best_l2 = grid[*best];
  return result;
}

// ---------------------------------------------------------------- evaluation

EvalReport evaluate(std::span<const int> predictions, std::span<const int> gold) {
  if (predictions.size() != gold.size()) {
    throw DataError(fmt::format("evaluate: {} predictions vs {} gold labels", predictions.size(),
                                gold.size()));
  }
  if (gold.empty()) throw DataError("evaluate: empty input");
  EvalReport r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool p = predictions[i] == 1;
    const bool g = gold[i] == 1;
    if (p && g) ++r.tp;
    else if (p && !g) ++r.fp;
    else if (!p && g) ++r.fn;
    else ++r.tn;
  }
  const auto ratio = [](std::size_t a, std::size_t b) {
    return static_cast<double>(a) / static_cast<double>(b);
  };
  r.precision_defined = r.tp + r.fp > 0;
  r.recall_defined = r.tp + r.fn > 0;
  r.precision = r.precision_defined ? ratio(r.tp, r.tp + r.fp) : 0.0;
  r.recall = r.recall_defined ? ratio(r.tp, r.tp + r.fn) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.accuracy = ratio(r.tp + r.tn, gold.size());
  return r;
}

// ---------------------------------------------------------------- persistence

namespace {
constexpr std::string_view kModelMagic = "epu-logreg";
constexpr int kModelVersion = 1;

std::string expect_field(std::istream& in, std::string_view key) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(fmt::format("model file: missing '{}' line", key));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (!line.starts_with(key) || line.size() <= key.size() || line[key.size()] != ' ') {
    throw DataError(fmt::format("model file: expected '{}', got '{}'", key, line));
  }
  return line.substr(key.size() + 1);
}

double expect_double(std::istream& in, std::string_view key) {
  const auto text = expect_field(in, key);
  const auto v = parse_double(text);
  if (!v) throw DataError(fmt::format("model file: bad number for '{}'", key));
  return *v;
}

std::size_t expect_count(std::istream& in, std::string_view key) {
  const auto text = expect_field(in, key);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("model file: bad count for '{}'", key));
  }
  return v;
}
}  // namespace

void save_model(const TrainedClassifier& c, std::ostream& out) {
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "vocab_size " << c.vocab.size() << '\n';
  out << "l2 " << format_double(c.model.l2) << '\n';
  out << "train_prevalence " << format_double(c.model.train_prevalence) << '\n';
  out << "min_df " << c.vocab.min_doc_freq() << '\n';
  for (std::size_t i = 0; i < c.vocab.size(); ++i) {
    out << c.vocab.token(i) << ',' << format_double(c.model.weights[i]) << '\n';
  }
  out << "bias " << format_double(c.model.bias) << '\n';
}

TrainedClassifier load_model(std::istream& in) {
  const auto version = expect_field(in, kModelMagic);
  if (version != std::to_string(kModelVersion)) {
    throw DataError(fmt::format("model file: unsupported version '{}'", version));
  }
  const std::size_t n = expect_count(in, "vocab_size");
  TrainedClassifier c;
  c.model.l2 = expect_double(in, "l2");
  c.model.train_prevalence = expect_double(in, "train_prevalence");
  const std::size_t min_df = expect_count(in, "min_df");
  std::vector<std::string> tokens;
  tokens.reserve(n);
  c.model.weights.reserve(n);
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw DataError("model file: truncated weight list");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comma = line.rfind(',');
    const auto w = comma == std::string::npos ? std::nullopt : parse_double(std::string_view(line).substr(comma + 1));
    if (!w) throw DataError(fmt::format("model file: bad weight line '{}'", line));
    tokens.push_back(line.substr(0, comma));
    c.model.weights.push_back(*w);
  }
  if (!std::is_sorted(tokens.begin(), tokens.end()) ||
      std::adjacent_find(tokens.begin(), tokens.end()) != tokens.end()) {
    throw DataError("model file: tokens must be unique and sorted");
  }
  c.vocab = Vocabulary::from_tokens(std::move(tokens), min_df);
  c.model.bias = expect_double(in, "bias");
  c.model.converged = true;
  return c;
}

}  // namespace epu
