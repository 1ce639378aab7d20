#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epu {

/// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote, or leading/trailing space.
std::string csv_escape(std::string_view field);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Strict double parse; rejects trailing garbage.
std::optional<double> parse_double(std::string_view text);

class CsvReader {
 public:
  /// Reads the header row immediately. A UTF-8 BOM and CRLF endings are tolerated.
  explicit CsvReader(std::istream& in);

  const std::vector<std::string>& header() const { return header_; }
  std::optional<std::size_t> column(std::string_view name) const;

  /// Next non-blank row; false at end of input.
  bool next(std::vector<std::string>& row);

  /// 1-based line number of the row last returned.
  std::size_t line_number() const { return line_no_; }

 private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::size_t line_no_ = 0;
};

}  // namespace epu
