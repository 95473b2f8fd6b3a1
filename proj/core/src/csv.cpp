#include "powersim/csv.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "powersim/errors.hpp"

namespace powersim {

namespace {

// One RFC-4180 record; handles quoted fields with embedded commas, quotes,
// and newlines. Returns false on end of input with no record started.
bool read_record(std::istream& in, std::vector<std::string>& fields,
                 std::size_t& line_no) {
  fields.clear();
  int c = in.get();
  if (c == std::istream::traits_type::eof()) return false;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (;; c = in.get()) {
    if (c == std::istream::traits_type::eof()) {
      if (in_quotes) throw Error("csv: unterminated quoted field at line " +
                                 std::to_string(line_no));
      break;
    }
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_no;
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      ++line_no;
      break;
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  if (!any && fields.empty() && field.empty()) return false;
  fields.push_back(std::move(field));
  return true;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& raw, double& out) {
  const std::string s = trimmed(raw);
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

void write_field(std::ostream& out, const std::string& s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char ch : s) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

DataTable read_csv(std::istream& in, CsvReadReport* report) {
  std::vector<std::string> header;
  std::size_t line_no = 1;
  if (!read_record(in, header, line_no))
    throw Error("csv: empty input, header row required");
  for (auto& h : header) h = trimmed(h);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j].empty())
      throw Error("csv: empty header name in column " + std::to_string(j + 1));

  std::vector<std::vector<double>> cols(header.size());
  std::vector<std::string> fields;
  std::vector<double> row(header.size());
  std::size_t dropped = 0;
  while (true) {
    const std::size_t record_line = line_no;
    if (!read_record(in, fields, line_no)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != header.size())
      throw Error("csv: row at line " + std::to_string(record_line) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(header.size()));
    bool missing = false;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string cell = trimmed(fields[j]);
      if (cell.empty()) {
        missing = true;
        break;
      }
      if (!parse_number(cell, row[j]))
        throw Error("csv: non-numeric cell '" + cell + "' at line " +
                    std::to_string(record_line) + ", column " +
                    std::to_string(j + 1) + " (" + header[j] + ")");
    }
    if (missing) {
      ++dropped;
      continue;
    }
    for (std::size_t j = 0; j < header.size(); ++j) cols[j].push_back(row[j]);
  }
  if (report) report->rows_dropped_missing = dropped;

  DataTable table;
  for (std::size_t j = 0; j < header.size(); ++j)
    table.add_column(header[j], std::move(cols[j]));
  return table;
}

DataTable read_csv_file(const std::string& path, CsvReadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("csv: cannot open '" + path + "'");
  return read_csv(in, report);
}

DataTable read_csv_string(const std::string& text, CsvReadReport* report) {
  std::istringstream in(text);
  return read_csv(in, report);
}

void write_csv(const DataTable& table, std::ostream& out) {
  for (std::size_t j = 0; j < table.ncol(); ++j) {
    if (j) out << ',';
    write_field(out, table.name(j));
  }
  out << '\n';
  for (std::size_t i = 0; i < table.nrow(); ++i) {
    for (std::size_t j = 0; j < table.ncol(); ++j) {
      if (j) out << ',';
      out << format_double(table.at(i, j));
    }
    out << '\n';
  }
}

void write_csv_file(const DataTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("csv: cannot write '" + path + "'");
  write_csv(table, out);
}

}  // namespace powersim
