#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace sgdm::csv {

/// Parsed CSV: leading '#' comment lines (marker stripped), one header row, data rows.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Throws InvalidInput for an unknown column.
  std::size_t column(const std::string& name) const;
  /// Parses "inf", "-inf" and "nan" as well as ordinary numbers.
  double number(std::size_t row, const std::string& name) const;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

/// Shortest round-tripping text ("%.17g"), with inf / -inf / nan literals.
std::string format(double v);

/// Joins fields with commas, quoting any field containing a comma, quote or newline.
void write_row(std::ostream& out, const std::vector<std::string>& fields);
void write_comments(std::ostream& out, const std::vector<std::string>& lines);

}  // namespace sgdm::csv
