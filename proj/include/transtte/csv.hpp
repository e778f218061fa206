#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace transtte::csv {

struct Row {
  std::size_t line = 0;  // 1-based line in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

/// Splits one CSV record. Double-quoted fields may contain commas; a doubled
/// quote inside a quoted field is a literal quote.
std::vector<std::string> split_record(std::string_view line);

/// Reads a whole file. Throws MissingFile if it cannot be opened and
/// SchemaViolation on an unterminated quote or ragged row.
Table read_file(const std::filesystem::path& path);

// Field parsers; throw SchemaViolation naming the file, line and column.
std::int64_t parse_int(const std::string& field, const std::string& where);
double parse_double(const std::string& field, const std::string& where);

}  // namespace transtte::csv
