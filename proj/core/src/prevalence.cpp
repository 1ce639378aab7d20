#include "epu/prevalence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "epu/csv.hpp"
#include "epu/error.hpp"

namespace epu {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::CC: return "CC";
    case Estimator::PCC: return "PCC";
    case Estimator::ImpLik: return "ImpLik";
    case Estimator::KeywordCC: return "KeywordCC";
  }
  return "?";
}

Estimator parse_estimator(std::string_view name) {
  for (auto e : {Estimator::CC, Estimator::PCC, Estimator::ImpLik, Estimator::KeywordCC}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError(fmt::format("unknown estimator '{}'", name));
}

double cc(std::span<const int> labels) {
  if (labels.empty()) throw DataError("cc: empty input");
  std::size_t pos = 0;
  for (int v : labels) {
    if (v != 0 && v != 1) throw DataError(fmt::format("cc: label {} is not binary", v));
    pos += static_cast<std::size_t>(v);
  }
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

double pcc(std::span<const double> probs) {
  if (probs.empty()) throw DataError("pcc: empty input");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError(fmt::format("pcc: probability {} outside [0,1]", p));
    sum += p;
  }
  return sum / static_cast<double>(probs.size());
}

double implicit_likelihood(std::span<const double> probs, double train_prior, double grid_step) {
  if (probs.empty()) throw DataError("implicit_likelihood: empty input");
  if (!(train_prior > 0.0 && train_prior < 1.0)) {
    throw DataError(fmt::format("implicit_likelihood: train prior {} outside (0,1)", train_prior));
  }
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw DataError(fmt::format("implicit_likelihood: grid step {} outside (0, 0.5]", grid_step));
  }
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DataError(fmt::format("implicit_likelihood: probability {} outside [0,1]", p));
    }
  }

  // Per-document likelihood ratios against each class: a_i = p_i/q, b_i = (1-p_i)/(1-q).
  const double q = train_prior;
  std::vector<double> a(probs.size());
  std::vector<double> b(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    a[i] = probs[i] / q;
    b[i] = (1.0 - probs[i]) / (1.0 - q);
  }

  std::vector<double> grid;
  const auto steps = static_cast<std::size_t>(std::floor(1.0 / grid_step + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) grid.push_back(std::min(1.0, static_cast<double>(k) * grid_step));
  if (grid.back() < 1.0) grid.push_back(1.0);

  constexpr double kInfeasible = -std::numeric_limits<double>::infinity();
  std::vector<double> ll(grid.size(), kInfeasible);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double pi = grid[g];
    double total = 0.0;
    bool feasible = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double term = pi * a[i] + (1.0 - pi) * b[i];
      if (term <= 0.0) {
        feasible = false;
        break;
      }
      total += std::log(term);
    }
    if (feasible) ll[g] = total;
  }

  std::size_t best = 0;
  bool any = false;
  double lo = std::numeric_limits<double>::infinity();
  bool all_feasible = true;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (ll[g] == kInfeasible) {
      all_feasible = false;
      continue;
    }
    lo = std::min(lo, ll[g]);
    if (!any || ll[g] > ll[best]) best = g;
    any = true;
  }
  if (!any) throw DataError("implicit_likelihood: every grid point is infeasible");
  const double flat_tolerance = 1e-12 * static_cast<double>(probs.size());
  if (all_feasible && ll[best] - lo <= flat_tolerance) return train_prior;
  return grid[best];
}

MonthlyTotals totals_from(std::span<const ScoredDocument> scored) {
  MonthlyTotals totals;
  for (const auto& d : scored) ++totals[{month_of(d.date), d.outlet}];
  return totals;
}

PrevalenceSeries aggregate_monthly(std::span<const ScoredDocument> scored, const MonthlyTotals& totals,
                                   Estimator estimator, const AggregateOptions& options,
                                   Diagnostics* diag) {
  std::map<std::pair<YearMonth, std::string>, std::vector<double>> cells;
  for (const auto& d : scored) {
    if (options.outlet && d.outlet != *options.outlet) continue;
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw DataError(fmt::format("document '{}' has score {} outside [0,1]", d.doc_id, d.score));
    }
    std::pair<YearMonth, std::string> key{month_of(d.date), d.outlet};
    if (!totals.contains(key)) {
      throw DataError(fmt::format("no published total for month {} outlet '{}'", to_string(key.first),
                                  key.second));
    }
    cells[std::move(key)].push_back(d.score);
  }

  // month -> per-outlet values
  std::map<YearMonth, std::vector<double>> by_month;
  std::map<YearMonth, bool> month_seen;
  for (const auto& [key, total] : totals) {
    const auto& [month, outlet] = key;
    if (options.outlet && outlet != *options.outlet) continue;
    month_seen[month];
    const auto it = cells.find(key);
    const std::size_t n_scored = it == cells.end() ? 0 : it->second.size();
    if (n_scored > total) {
      throw DataError(fmt::format("month {} outlet '{}': {} scored documents exceed total {}",
                                  to_string(month), outlet, n_scored, total));
    }
    if (total == 0) continue;
    double value = 0.0;
    switch (estimator) {
      case Estimator::CC:
      case Estimator::KeywordCC: {
        std::size_t pos = 0;
        if (n_scored > 0) {
          for (double s : it->second) pos += s >= 0.5 ? 1 : 0;
        }
        value = static_cast<double>(pos) / static_cast<double>(total);
        break;
      }
      case Estimator::PCC: {
        double sum = 0.0;
        if (n_scored > 0) {
          for (double s : it->second) sum += s;
        }
        value = sum / static_cast<double>(total);
        break;
      }
      case Estimator::ImpLik:
        if (n_scored == 0) {
          note(diag, fmt::format("month {} outlet '{}': no scored documents for ImpLik", to_string(month),
                                 outlet));
          continue;
        }
        value = implicit_likelihood(it->second, options.train_prior, options.grid_step);
        break;
    }
    by_month[month].push_back(value);
  }

  PrevalenceSeries series;
  series.method = estimator;
  series.outlet = options.outlet;
  for (const auto& [month, _] : month_seen) {
    const auto it = by_month.find(month);
    if (it == by_month.end()) {
      note(diag, fmt::format("month {} omitted: zero published total", to_string(month)));
      continue;
    }
    double sum = 0.0;
    for (double v : it->second) sum += v;
    series.points[month] = sum / static_cast<double>(it->second.size());
  }
  return series;
}

// ---------------------------------------------------------------- CSV

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::size_t require_column(const CsvReader& r, std::string_view name, const std::filesystem::path& path) {
  const auto c = r.column(name);
  if (!c) throw DataError(fmt::format("'{}': missing column '{}'", path.string(), name));
  return *c;
}

[[noreturn]] void bad_row(const std::filesystem::path& path, std::size_t line, std::string_view why) {
  throw DataError(fmt::format("{}:{}: {}", path.string(), line, why));
}

}  // namespace

void write_scored_csv(std::span<const ScoredDocument> docs, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "doc_id,date,outlet,score\n";
  for (const auto& d : docs) {
    out << csv_escape(d.doc_id) << ',' << to_string(d.date) << ',' << csv_escape(d.outlet) << ','
        << format_double(d.score) << '\n';
  }
}

std::vector<ScoredDocument> read_scored_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  CsvReader reader(in);
  const auto c_id = require_column(reader, "doc_id", path);
  const auto c_date = require_column(reader, "date", path);
  const auto c_outlet = require_column(reader, "outlet", path);
  const auto c_score = require_column(reader, "score", path);
  std::vector<ScoredDocument> docs;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() < reader.header().size()) bad_row(path, reader.line_number(), "too few fields");
    const auto date = parse_date(row[c_date]);
    const auto score = parse_double(row[c_score]);
    if (!date) bad_row(path, reader.line_number(), "invalid date");
    if (!score) bad_row(path, reader.line_number(), "invalid score");
    docs.push_back({row[c_id], *date, row[c_outlet], *score});
  }
  return docs;
}

void write_totals_csv(const MonthlyTotals& totals, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "month,outlet,total\n";
  for (const auto& [key, n] : totals) {
    out << to_string(key.first) << ',' << csv_escape(key.second) << ',' << n << '\n';
  }
}

MonthlyTotals read_totals_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  CsvReader reader(in);
  const auto c_month = require_column(reader, "month", path);
  const auto c_outlet = require_column(reader, "outlet", path);
  const auto c_total = require_column(reader, "total", path);
  MonthlyTotals totals;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() < reader.header().size()) bad_row(path, reader.line_number(), "too few fields");
    const auto month = parse_year_month(row[c_month]);
    if (!month) bad_row(path, reader.line_number(), "invalid month");
    std::size_t n = 0;
    const auto& t = row[c_total];
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
    if (ec != std::errc{} || ptr != t.data() + t.size()) bad_row(path, reader.line_number(), "invalid total");
    if (!totals.emplace(std::pair{*month, row[c_outlet]}, n).second) {
      bad_row(path, reader.line_number(), "duplicate month/outlet");
    }
  }
  return totals;
}

void write_series_csv(const std::map<YearMonth, double>& points, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "month,value\n";
  for (const auto& [m, v] : points) out << to_string(m) << ',' << format_double(v) << '\n';
}

std::map<YearMonth, double> read_series_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  CsvReader reader(in);
  const auto c_month = require_column(reader, "month", path);
  const auto c_value = require_column(reader, "value", path);
  std::map<YearMonth, double> points;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() < reader.header().size()) bad_row(path, reader.line_number(), "too few fields");
    const auto month = parse_year_month(row[c_month]);
    const auto value = parse_double(row[c_value]);
    if (!month) bad_row(path, reader.line_number(), "invalid month");
    if (!value) bad_row(path, reader.line_number(), "invalid value");
    if (!points.emplace(*month, *value).second) bad_row(path, reader.line_number(), "duplicate month");
  }
  return points;
}

}  // namespace epu
