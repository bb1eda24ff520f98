#include "pvqe/csv.hpp"

#include "pvqe/error.hpp"

#include <cmath>
#include <cstdio>

namespace pvqe {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size())
    throw ValidationError("row has " + std::to_string(row.size()) + " fields, header has " +
                          std::to_string(header.size()));
  rows.push_back(std::move(row));
}

void CsvTable::add_numbers(const std::vector<double> &row) {
  std::vector<std::string> r;
  r.reserve(row.size());
  for (double v : row) r.push_back(format_number(v));
  add_row(std::move(r));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string> &f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) out += ',';
      out += csv_field(f[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto &r : rows) line(r);
  return out;
}

} // namespace pvqe
