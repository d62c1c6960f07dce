#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "lyatensor/errors.hpp"
#include "lyatensor/linalg.hpp"

namespace lyatensor {

// Raised for filesystem problems while writing artifacts (exit code 4).
class IoError : public Error {
 public:
  using Error::Error;
};

using json = nlohmann::ordered_json;

// Shortest round-trip decimal form, locale-independent ('.' separator).
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw NumericFailure("format_number: to_chars failed");
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// One CSV cell: a number, or empty for "not applicable on this row".
using CsvCell = std::optional<double>;
using CsvRow = std::vector<CsvCell>;

// Time-series table. Record 1 carries the schema version ("schema,v1",
// padded with empty fields so every record has the same width); record 2
// holds the column names; then one record per sample.
struct SeriesTable {
  std::vector<std::string> columns;
  std::vector<CsvRow> rows;

  void add_row(const CsvRow& row) {
    if (row.size() != columns.size())
      throw ContractViolation("SeriesTable: row width does not match column count");
    rows.push_back(row);
  }

  std::string to_csv() const {
    std::string out = "schema,v1";
    for (size_t i = 2; i < columns.size(); ++i) out += ',';
    out += '\n';
    for (size_t i = 0; i < columns.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(columns[i]);
    }
    out += '\n';
    for (const CsvRow& row : rows) {
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        if (row[i]) out += format_number(*row[i]);
      }
      out += '\n';
    }
    return out;
  }
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

inline json to_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

inline json trace_to_json(const std::vector<std::pair<double, double>>& trace) {
  json a = json::array();
  for (const auto& [t, v] : trace) a.push_back(json::array({t, v}));
  return a;
}

}  // namespace lyatensor
