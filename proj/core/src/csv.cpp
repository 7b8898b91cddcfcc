#include "minilake/csv.hpp"

#include <charconv>

namespace minilake {

namespace {

struct Field {
  std::string text;
  bool quoted = false;
};

// Splits one line into fields. `row` is 1-based and only used in errors.
std::vector<Field> split_line(std::string_view line, size_t row) {
  std::vector<Field> fields;
  Field cur;
  size_t i = 0;
  bool in_quotes = false;
  bool was_quoted = false;
  auto fail = [&](const std::string& what) {
    raise(Errc::ParseError, "csv row " + std::to_string(row) + ", col " +
                                std::to_string(fields.size() + 1) + ": " + what);
  };
  while (i <= line.size()) {
    char c = i < line.size() ? line[i] : ',';  // sentinel flushes last field
    bool at_end = i == line.size();
    if (in_quotes) {
      if (at_end) fail("unterminated quoted field");
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.text.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.text.push_back(c);
      }
    } else if (c == ',') {
      cur.quoted = was_quoted;
      fields.push_back(std::move(cur));
      cur = Field{};
      was_quoted = false;
    } else if (c == '"') {
      if (!cur.text.empty()) fail("quote in unquoted field");
      in_quotes = true;
      was_quoted = true;
    } else {
      if (was_quoted) fail("data after closing quote");
      cur.text.push_back(c);
    }
    ++i;
  }
  return fields;
}

CellValue parse_cell(const Field& field, const ColumnDef& col, size_t row,
                     size_t col_index) {
  auto fail = [&](const std::string& what) {
    raise(Errc::ParseError, "csv row " + std::to_string(row) + ", col " +
                                std::to_string(col_index + 1) + " (" + col.name +
                                "): " + what);
  };
  if (field.text.empty() && !field.quoted) {
    if (!col.nullable) fail("empty value in non-nullable column");
    return std::monostate{};
  }
  const std::string& s = field.text;
  switch (col.type) {
    case ColumnType::Int64: {
      int64_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail("not an integer: '" + s + "'");
      }
      return v;
    }
    case ColumnType::Float64: {
      double v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail("not a number: '" + s + "'");
      }
      return canonicalize_float(v);
    }
    case ColumnType::Bool: {
      if (s == "true") return true;
      if (s == "false") return false;
      fail("not a bool (expected true/false): '" + s + "'");
      break;
    }
    case ColumnType::String:
      return s;
  }
  return std::monostate{};  // unreachable
}

}  // namespace

Table import_csv(std::string_view text, const Schema& schema) {
  schema.validate();
  Table table = Table::empty(schema);

  size_t pos = 0;
  size_t row = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = eol == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++row;

    auto fields = split_line(line, row);
    if (!saw_header) {
      if (fields.size() != schema.columns.size()) {
        raise(Errc::SchemaMismatch,
              "header has " + std::to_string(fields.size()) + " columns, schema has " +
                  std::to_string(schema.columns.size()));
      }
      for (size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].text != schema.columns[i].name) {
          raise(Errc::SchemaMismatch, "header column " + std::to_string(i + 1) +
                                          " is '" + fields[i].text + "', expected '" +
                                          schema.columns[i].name + "'");
        }
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;  // tolerate trailing blank line
    if (fields.size() != schema.columns.size()) {
      raise(Errc::ParseError, "csv row " + std::to_string(row) + ": expected " +
                                  std::to_string(schema.columns.size()) +
                                  " fields, got " + std::to_string(fields.size()));
    }
    std::vector<CellValue> cells;
    cells.reserve(fields.size());
    for (size_t i = 0; i < fields.size(); ++i) {
      cells.push_back(parse_cell(fields[i], schema.columns[i], row, i));
    }
    table.append_row(cells);
  }
  if (!saw_header) {
    raise(Errc::SchemaMismatch, "csv input has no header row");
  }
  return table;
}

}  // namespace minilake
