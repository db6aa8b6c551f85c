#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aidetect/error.hpp"

namespace aidetect::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 reader. Records end at LF or CRLF, fields may be double-quoted
// with "" as the escaped quote. A leading UTF-8 BOM is skipped. Errors carry
// the byte offset of the offending character.
inline Table parse(std::string_view data) {
  Table table;
  std::size_t i = 0;
  if (data.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

  std::vector<std::string> record;
  std::string field;
  bool record_started = false;

  const auto end_record = [&](std::size_t at) {
    record.push_back(std::move(field));
    field.clear();
    if (table.header.empty()) {
      table.header = std::move(record);
    } else {
      if (record.size() != table.header.size()) {
        throw ParseError(at, "expected " + std::to_string(table.header.size()) + " fields, found " +
                                 std::to_string(record.size()));
      }
      table.rows.push_back(std::move(record));
    }
    record.clear();
    record_started = false;
  };

  while (i < data.size()) {
    const char c = data[i];
    if (c == '"') {
      if (!field.empty()) throw ParseError(i, "quote inside unquoted field");
      const std::size_t open = i;
      ++i;
      bool closed = false;
      while (i < data.size()) {
        if (data[i] == '"') {
          if (i + 1 < data.size() && data[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            closed = true;
            ++i;
            break;
          }
        } else {
          field.push_back(data[i++]);
        }
      }
      if (!closed) throw ParseError(open, "unterminated quoted field");
      record_started = true;
      if (i < data.size() && data[i] != ',' && data[i] != '\n' && data[i] != '\r') {
        throw ParseError(i, "unexpected character after closing quote");
      }
      continue;
    }
    if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      record_started = true;
      ++i;
    } else if (c == '\r' || c == '\n') {
      const std::size_t at = i;
      if (c == '\r') {
        if (i + 1 >= data.size() || data[i + 1] != '\n') throw ParseError(i, "bare carriage return");
        ++i;
      }
      ++i;
      if (record_started || !field.empty() || !record.empty()) {
        end_record(at);
      }
    } else {
      field.push_back(c);
      record_started = true;
      ++i;
    }
  }
  if (record_started || !field.empty() || !record.empty()) end_record(data.size());
  return table;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Table read(const std::string& path) { return parse(read_file(path)); }

inline std::size_t column_index(const Table& table, const std::string& name) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == name) return i;
  }
  throw SchemaError(name);
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

}  // namespace aidetect::csv
