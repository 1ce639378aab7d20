#include "epu/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "epu/csv.hpp"
#include "epu/error.hpp"

namespace epu {

ExternalSeries load_external_series(const std::filesystem::path& path, Diagnostics* diag) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open series file '{}'", path.string()));
  CsvReader reader(in);
  const std::size_t c_date = reader.column("date").value_or(reader.column("month").value_or(0));
  const std::size_t c_value = reader.column("value").value_or(1);
  if (reader.header().size() < 2) {
    throw DataError(fmt::format("'{}': expected a date,value header", path.string()));
  }
  ExternalSeries series;
  series.name = path.stem().string();
  std::optional<bool> daily;
  std::vector<std::string> row;
  while (reader.next(row)) {
    const auto where = fmt::format("{}:{}", path.string(), reader.line_number());
    if (row.size() <= std::max(c_date, c_value)) throw DataError(where + ": too few fields");
    const auto value = parse_double(row[c_value]);
    if (!value) {
      note(diag, where + ": skipped row without a numeric value");
      continue;
    }
    if (!std::isfinite(*value)) throw DataError(where + ": non-finite value");
    const bool is_daily = row[c_date].size() > 7;
    if (daily && *daily != is_daily) throw DataError(where + ": mixes daily and monthly dates");
    daily = is_daily;
    if (is_daily) {
      const auto d = parse_date(row[c_date]);
      if (!d) throw DataError(where + ": invalid date '" + row[c_date] + "'");
      if (!series.daily.emplace(*d, *value).second) throw DataError(where + ": duplicate date");
    } else {
      const auto m = parse_year_month(row[c_date]);
      if (!m) throw DataError(where + ": invalid month '" + row[c_date] + "'");
      if (!series.monthly.emplace(*m, *value).second) throw DataError(where + ": duplicate month");
    }
  }
  return series;
}

MonthlySeries monthly_mean(const std::string& name, const std::map<Date, double>& daily) {
  MonthlySeries out{name, {}};
  std::map<YearMonth, std::pair<double, std::size_t>> acc;
  for (const auto& [d, v] : daily) {
    auto& [sum, n] = acc[month_of(d)];
    sum += v;
    ++n;
  }
  for (const auto& [m, sn] : acc) out.points[m] = sn.first / static_cast<double>(sn.second);
  return out;
}

MonthlySeries to_monthly(const ExternalSeries& series) {
  if (series.is_daily()) return monthly_mean(series.name, series.daily);
  return {series.name, series.monthly};
}

AlignedPair align(const MonthlySeries& a, const MonthlySeries& b) {
  AlignedPair out;
  auto ia = a.points.begin();
  auto ib = b.points.begin();
  while (ia != a.points.end() && ib != b.points.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      out.months.push_back(ia->first);
      out.a.push_back(ia->second);
      out.b.push_back(ib->second);
      ++ia;
      ++ib;
    }
  }
  if (out.months.size() < kMinOverlapMonths) {
    throw DataError(fmt::format("'{}' and '{}' overlap in {} months; at least {} needed", a.name, b.name,
                                out.months.size(), kMinOverlapMonths));
  }
  out.first = out.months.front();
  out.last = out.months.back();
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError(fmt::format("pearson: lengths {} and {} differ", a.size(), b.size()));
  if (a.size() < 3) throw DataError("pearson: at least 3 points are required");
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DataError("pearson: constant series");
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(std::span<const MonthlySeries> series, Diagnostics* diag) {
  if (series.size() < 2) throw DataError("correlation_matrix: at least two series are required");
  CorrelationMatrix m;
  const std::size_t k = series.size();
  m.values.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    m.labels.push_back(series[i].name);
    m.values[i][i] = 1.0;
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      try {
        const auto pair = align(series[i], series[j]);
        const double r = pearson(pair.a, pair.b);
        m.values[i][j] = r;
        m.values[j][i] = r;
      } catch (const DataError& e) {
        note(diag, fmt::format("correlation {} vs {}: {}", series[i].name, series[j].name, e.what()));
      }
    }
  }
  return m;
}

void write_matrix_csv(const CorrelationMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << "series";
  for (const auto& l : m.labels) out << ',' << csv_escape(l);
  out << '\n';
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out << csv_escape(m.labels[i]);
    for (const auto& v : m.values[i]) out << ',' << (v ? format_double(*v) : std::string());
    out << '\n';
  }
}

CorrelationMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  CsvReader reader(in);
  CorrelationMatrix m;
  m.labels.assign(reader.header().begin() + (reader.header().empty() ? 0 : 1), reader.header().end());
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != m.labels.size() + 1 || m.values.size() >= m.labels.size() ||
        row[0] != m.labels[m.values.size()]) {
      throw DataError(fmt::format("{}:{}: malformed matrix row", path.string(), reader.line_number()));
    }
    std::vector<std::optional<double>> values;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j].empty()) {
        values.emplace_back();
        continue;
      }
      const auto v = parse_double(row[j]);
      if (!v) throw DataError(fmt::format("{}:{}: bad number", path.string(), reader.line_number()));
      values.emplace_back(*v);
    }
    m.values.push_back(std::move(values));
  }
  if (m.values.size() != m.labels.size()) throw DataError(fmt::format("'{}': matrix is not square", path.string()));
  return m;
}

}  // namespace epu
