#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epu/calendar.hpp"
#include "epu/diagnostics.hpp"

namespace epu {

/// A named monthly series (an EPU index or a monthly external benchmark).
struct MonthlySeries {
  std::string name;
  std::map<YearMonth, double> points;

  bool operator==(const MonthlySeries&) const = default;
};

/// External benchmark as read from disk: daily or monthly observations.
struct ExternalSeries {
  std::string name;
  std::map<Date, double> daily;
  std::map<YearMonth, double> monthly;

  bool is_daily() const { return !daily.empty(); }
};

/// CSV date,value. Dates are either all YYYY-MM-DD (daily) or all YYYY-MM (monthly).
/// Rows with an empty or non-numeric value (e.g. "." for market holidays) are skipped with a
/// diagnostic; duplicate dates and non-finite values are errors. Named after the file stem.
ExternalSeries load_external_series(const std::filesystem::path& path, Diagnostics* diag = nullptr);

/// Arithmetic mean of the daily values in each calendar month; empty months are absent.
MonthlySeries monthly_mean(const std::string& name, const std::map<Date, double>& daily);

/// Monthly view of an external series (daily data is averaged per month).
MonthlySeries to_monthly(const ExternalSeries& series);

struct AlignedPair {
  std::vector<YearMonth> months;
  std::vector<double> a;
  std::vector<double> b;
  YearMonth first;
  YearMonth last;
};

inline constexpr std::size_t kMinOverlapMonths = 3;

/// Inner join on month. Throws DataError when fewer than 3 months overlap.
AlignedPair align(const MonthlySeries& a, const MonthlySeries& b);

/// Sample Pearson correlation. Throws DataError on unequal lengths, fewer than 3 points,
/// or a constant input.
double pearson(std::span<const double> a, std::span<const double> b);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> values;  // nullopt: pair could not be computed

  std::optional<double> at(std::size_t i, std::size_t j) const { return values[i][j]; }
  bool operator==(const CorrelationMatrix&) const = default;
};

/// Pairwise Pearson over pairwise-aligned months. Each pair is computed once and mirrored;
/// the diagonal is 1. Failing pairs become missing cells with a diagnostic.
/// Throws DataError for fewer than two series.
CorrelationMatrix correlation_matrix(std::span<const MonthlySeries> series, Diagnostics* diag = nullptr);

/// Header row and first column carry the labels; missing cells are empty.
void write_matrix_csv(const CorrelationMatrix& m, const std::filesystem::path& path);
CorrelationMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace epu
