#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epu/calendar.hpp"
#include "epu/diagnostics.hpp"

namespace epu {

enum class Estimator { CC, PCC, ImpLik, KeywordCC };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

/// Classify and count: fraction of 1-labels. Throws DataError on empty or non-binary input.
double cc(std::span<const int> labels);

/// Probabilistic classify and count: mean probability. Throws DataError if a value is
/// outside [0, 1] or the input is empty.
double pcc(std::span<const double> probs);

inline constexpr double kDefaultImplikStep = 0.001;

/// Implicit-likelihood prevalence estimate.
///
/// Reads each score p as a posterior under the training prior q, so the per-document
/// likelihood of prevalence pi is pi*p/q + (1-pi)*(1-p)/(1-q). Maximizes the summed log
/// likelihood over the grid {0, step, 2*step, ..., 1}. A grid point with any zero term is
/// infeasible. When the likelihood is flat in pi the training prior is returned; among
/// equal maxima the smallest pi wins.
double implicit_likelihood(std::span<const double> probs, double train_prior,
                           double grid_step = kDefaultImplikStep);

struct ScoredDocument {
  std::string doc_id;
  Date date;
  std::string outlet;
  double score = 0.0;  // probability or hard 0/1 label

  bool operator==(const ScoredDocument&) const = default;
};

/// Published document counts per (month, outlet).
using MonthlyTotals = std::map<std::pair<YearMonth, std::string>, std::size_t>;

struct PrevalenceSeries {
  Estimator method = Estimator::CC;
  std::optional<std::string> outlet;
  std::map<YearMonth, double> points;

  bool operator==(const PrevalenceSeries&) const = default;
};

struct AggregateOptions {
  double train_prior = 0.5;  // ImpLik only
  double grid_step = kDefaultImplikStep;
  std::optional<std::string> outlet;  // restrict to one outlet
};

/// Monthly prevalence normalized per outlet.
///
/// CC and KeywordCC count scores >= 0.5 as positives; PCC sums scores. Both divide by the
/// published total for the cell, so documents missing from `scored` act as negatives.
/// ImpLik runs over the scored documents of the cell only. A month's value is the
/// unweighted mean over the outlets present that month. Throws DataError when a scored
/// document has no totals entry or a cell has more scored documents than its total.
/// Months whose total is zero are omitted with a diagnostic.
PrevalenceSeries aggregate_monthly(std::span<const ScoredDocument> scored, const MonthlyTotals& totals,
                                   Estimator estimator, const AggregateOptions& options = {},
                                   Diagnostics* diag = nullptr);

/// Counts per (month, outlet) from the scored documents themselves.
MonthlyTotals totals_from(std::span<const ScoredDocument> scored);

// CSV interchange: doc_id,date,outlet,score / month,outlet,total / month,value
void write_scored_csv(std::span<const ScoredDocument> docs, const std::filesystem::path& path);
std::vector<ScoredDocument> read_scored_csv(const std::filesystem::path& path);
void write_totals_csv(const MonthlyTotals& totals, const std::filesystem::path& path);
MonthlyTotals read_totals_csv(const std::filesystem::path& path);
void write_series_csv(const std::map<YearMonth, double>& points, const std::filesystem::path& path);
std::map<YearMonth, double> read_series_csv(const std::filesystem::path& path);

}  // namespace epu
