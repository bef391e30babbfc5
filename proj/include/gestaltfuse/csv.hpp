// csv.hpp

// Copyright 2026  gestaltfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Minimal strict RFC-4180 support for the fixed-header CSV schemas used as
// interchange formats. Headers must match a schema exactly: extra, missing,
// or reordered columns are rejected so schema drift is caught at load time.

#ifndef GESTALTFUSE_CSV_HPP_
#define GESTALTFUSE_CSV_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gestaltfuse/core.hpp"

namespace gestaltfuse {

class MalformedRow : public Error {
 public:
  MalformedRow(size_t line, const std::string& reason)
      : Error("MalformedRow", "line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  size_t line() const noexcept { return line_; }

 private:
  size_t line_;
};

class EmptyFile : public Error {
 public:
  explicit EmptyFile(const std::string& path)
      : Error("EmptyFile", "no data rows in " + path) {}
};

struct CsvRow {
  std::vector<std::string> fields;
  size_t line = 0;  // physical line the row starts on, 1-based
};

/// Parse a full CSV document. Quoted fields may contain commas, doubled
/// quotes, and newlines. A trailing newline does not produce an empty row.
inline std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  size_t line = 1;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    CsvRow row;
    row.line = line;
    bool row_done = false;
    while (!row_done) {
      std::string field;
      if (i < n && text[i] == '"') {
        ++i;  // opening quote
        bool closed = false;
        while (i < n) {
          char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field += '"';
              i += 2;
            } else {
              ++i;
              closed = true;
              break;
            }
          } else {
            if (c == '\n') ++line;
            field += c;
            ++i;
          }
        }
        if (!closed) throw MalformedRow(row.line, "unterminated quoted field");
        if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
          throw MalformedRow(row.line, "garbage after closing quote");
      } else {
        while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"')
            throw MalformedRow(row.line, "bare quote inside unquoted field");
          field += text[i];
          ++i;
        }
      }
      row.fields.push_back(std::move(field));
      if (i >= n) {
        row_done = true;
      } else if (text[i] == ',') {
        ++i;
      } else {  // \n or \r\n
        if (text[i] == '\r') ++i;
        if (i < n && text[i] == '\n') ++i;
        ++line;
        row_done = true;
      }
    }
    // A lone trailing newline yields a single empty field; skip it.
    if (!(row.fields.size() == 1 && row.fields[0].empty() && i >= n))
      rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("FileWriteFailed", "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

/// Load a CSV file and verify its header matches `schema` exactly.
/// Returns data rows only. Each data row must have exactly schema.size()
/// fields.
inline std::vector<CsvRow> load_csv(const std::string& path,
                                    const std::vector<std::string>& schema) {
  auto rows = parse_csv(read_file(path));
  if (rows.empty()) throw MalformedRow(1, "missing header in " + path);
  const auto& header = rows.front().fields;
  if (header != schema) {
    std::string want, got;
    for (const auto& c : schema) want += (want.empty() ? "" : ",") + c;
    for (const auto& c : header) got += (got.empty() ? "" : ",") + c;
    throw MalformedRow(1, "header mismatch in " + path + ": expected '" +
                              want + "', got '" + got + "'");
  }
  rows.erase(rows.begin());
  for (const auto& row : rows)
    if (row.fields.size() != schema.size())
      throw MalformedRow(row.line,
                         "expected " + std::to_string(schema.size()) +
                             " fields, got " + std::to_string(row.fields.size()));
  return rows;
}

inline std::string csv_escape(std::string_view field, bool always_quote = false) {
  bool needs = always_quote;
  for (char c : field)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') needs = true;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> schema) : width_(schema.size()) {
    append_row(schema, false);
  }

  void append_row(const std::vector<std::string>& fields, bool quote_all = false) {
    if (fields.size() != width_ && width_ != 0)
      throw Error("CsvShapeMismatch", "row width " + std::to_string(fields.size()) +
                                          " != " + std::to_string(width_));
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i) buf_ += ',';
      buf_ += csv_escape(fields[i], quote_all);
    }
    buf_ += '\n';
  }

  const std::string& str() const { return buf_; }
  void save(const std::string& path) const { write_file(path, buf_); }

 private:
  size_t width_;
  std::string buf_;
};

}  // namespace gestaltfuse

#endif  // GESTALTFUSE_CSV_HPP_
