#pragma once

#include <iosfwd>
#include <string>

#include "powersim/table.hpp"

namespace powersim {

struct CsvReadReport {
  std::size_t rows_dropped_missing = 0;  // rows rejected for empty cells
};

// Reads an RFC-4180 CSV with a required header row. All cells must be
// numeric; an empty cell drops the whole row (counted in the report), any
// other non-numeric cell is an error carrying row/column coordinates.
DataTable read_csv(std::istream& in, CsvReadReport* report = nullptr);
DataTable read_csv_file(const std::string& path, CsvReadReport* report = nullptr);
DataTable read_csv_string(const std::string& text, CsvReadReport* report = nullptr);

// Writes a table back out; values use the shortest representation that
// round-trips exactly.
void write_csv(const DataTable& table, std::ostream& out);
void write_csv_file(const DataTable& table, const std::string& path);

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace powersim
