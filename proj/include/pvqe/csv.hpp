#pragma once

// CSV helpers shared by every writer: 12 significant digits, LF endings,
// RFC 4180 quoting.

#include <string>
#include <vector>

namespace pvqe {

/// %.12g, with "nan", "inf" and "-inf" spelled out.
std::string format_number(double v);
/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string &s);

/// Header plus homogeneous rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  void add_numbers(const std::vector<double> &row);
  std::string str() const;
};

} // namespace pvqe
