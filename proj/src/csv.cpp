#include "transtte/csv.hpp"

#include <charconv>
#include <fstream>

#include "transtte/error.hpp"

namespace transtte::csv {

std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw Error(ErrorKind::SchemaViolation, "unterminated quoted field");
  }
  out.push_back(std::move(cur));
  return out;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::MissingFile, path.string());
  }
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_record(line);
    } catch (const Error& e) {
      throw Error(ErrorKind::SchemaViolation,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::SchemaViolation,
                  path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " columns, got " +
                      std::to_string(fields.size()));
    }
    table.rows.push_back(Row{line_no, std::move(fields)});
  }
  if (!have_header) {
    throw Error(ErrorKind::SchemaViolation, path.string() + ": missing header");
  }
  return table;
}

std::int64_t parse_int(const std::string& field, const std::string& where) {
  std::int64_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw Error(ErrorKind::SchemaViolation, where + ": not an integer: '" + field + "'");
  }
  return value;
}

double parse_double(const std::string& field, const std::string& where) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw Error(ErrorKind::SchemaViolation, where + ": not a number: '" + field + "'");
  }
  return value;
}

}  // namespace transtte::csv
