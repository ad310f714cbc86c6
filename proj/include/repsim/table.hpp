#pragma once

// Flat result tables and matrix files.
//
// CSV: comma separated, one header line, LF line endings, floating point
// cells written with 17 significant digits so that reading them back yields
// the identical double. JSON: array of flat objects keyed by the header.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "repsim/linalg.hpp"

namespace repsim {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  // Appends a row; throws std::invalid_argument on a width mismatch.
  void add_row(std::vector<Cell> row);
};

enum class TableFormat { kCsv, kJson };

std::string format_double(double v);

void write_csv(const Table& table, std::ostream& out);
void write_json(const Table& table, std::ostream& out);
void write_table(const Table& table, TableFormat format, std::ostream& out);

// Writes to `path`; I/O failures throw InputError naming the path.
void emit_table(const Table& table, const std::filesystem::path& path, TableFormat format);

// Parses CSV produced by write_csv. Integer-looking cells become int64,
// other numeric cells double, the rest strings.
Table read_csv_table(std::istream& in);
Table read_csv_table(const std::filesystem::path& path);

// Numeric matrix CSV: no header, rows = stimuli, '#' comment lines and blank
// lines ignored. Parse errors throw InputError with line and column.
Matrix read_matrix_csv(std::istream& in, const std::string& source = "<stream>");
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const Matrix& m, std::ostream& out);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace repsim
