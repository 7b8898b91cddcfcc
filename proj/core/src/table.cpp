#include "minilake/table.hpp"

#include <cmath>
#include <cstring>
#include <set>

namespace minilake {

const char* column_type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Int64: return "INT64";
    case ColumnType::Float64: return "FLOAT64";
    case ColumnType::String: return "STRING";
    case ColumnType::Bool: return "BOOL";
  }
  return "?";
}

ColumnType column_type_from_name(const std::string& name) {
  if (name == "INT64") return ColumnType::Int64;
  if (name == "FLOAT64") return ColumnType::Float64;
  if (name == "STRING") return ColumnType::String;
  if (name == "BOOL") return ColumnType::Bool;
  raise(Errc::SchemaMismatch, "unknown column type: " + name);
}

namespace {

bool valid_identifier(const std::string& name) {
  if (name.empty()) return false;
  auto head = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
  };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(name[0])) return false;
  for (size_t i = 1; i < name.size(); ++i) {
    if (!tail(name[i])) return false;
  }
  return true;
}

bool cell_matches_type(const CellValue& v, ColumnType t) {
  switch (t) {
    case ColumnType::Int64: return std::holds_alternative<int64_t>(v);
    case ColumnType::Float64: return std::holds_alternative<double>(v);
    case ColumnType::String: return std::holds_alternative<std::string>(v);
    case ColumnType::Bool: return std::holds_alternative<bool>(v);
  }
  return false;
}

}  // namespace

void Schema::validate() const {
  std::set<std::string> seen;
  for (const auto& col : columns) {
    if (!valid_identifier(col.name)) {
      raise(Errc::SchemaMismatch, "invalid column name: '" + col.name + "'");
    }
    if (!seen.insert(col.name).second) {
      raise(Errc::SchemaMismatch, "duplicate column name: " + col.name);
    }
  }
}

std::optional<size_t> Schema::index_of(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

const ColumnDef* Schema::find(const std::string& name) const {
  auto idx = index_of(name);
  return idx ? &columns[*idx] : nullptr;
}

double canonicalize_float(double v) {
  if (std::isnan(v)) {
    uint64_t quiet = 0x7FF8000000000000ULL;
    double out;
    std::memcpy(&out, &quiet, sizeof(out));
    return out;
  }
  return v;
}

uint64_t float_bits(double v) {
  double canon = canonicalize_float(v);
  uint64_t bits;
  std::memcpy(&bits, &canon, sizeof(bits));
  return bits;
}

bool cell_equal(const CellValue& a, const CellValue& b) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<double>(a)) {
    return float_bits(std::get<double>(a)) == float_bits(std::get<double>(b));
  }
  return a == b;
}

Table Table::empty(Schema schema) {
  schema.validate();
  Table t;
  t.columns.resize(schema.columns.size());
  t.schema = std::move(schema);
  return t;
}

void Table::validate() const {
  schema.validate();
  if (columns.size() != schema.columns.size()) {
    raise(Errc::CorruptData, "column vector count does not match schema");
  }
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].size() != row_count) {
      raise(Errc::CorruptData,
            "column '" + schema.columns[i].name + "' has wrong length");
    }
    for (const auto& v : columns[i]) {
      if (is_null(v)) {
        if (!schema.columns[i].nullable) {
          raise(Errc::CorruptData,
                "null in non-nullable column '" + schema.columns[i].name + "'");
        }
      } else if (!cell_matches_type(v, schema.columns[i].type)) {
        raise(Errc::CorruptData,
              "value type mismatch in column '" + schema.columns[i].name + "'");
      }
    }
  }
}

void Table::append_row(const std::vector<CellValue>& row) {
  if (row.size() != columns.size()) {
    raise(Errc::EvalError, "row width does not match schema");
  }
  for (size_t i = 0; i < row.size(); ++i) columns[i].push_back(row[i]);
  ++row_count;
}

std::vector<CellValue> Table::row(uint64_t index) const {
  std::vector<CellValue> out;
  out.reserve(columns.size());
  for (const auto& col : columns) out.push_back(col[index]);
  return out;
}

bool Table::equals(const Table& other) const {
  if (schema != other.schema || row_count != other.row_count) return false;
  for (size_t i = 0; i < columns.size(); ++i) {
    for (uint64_t r = 0; r < row_count; ++r) {
      if (!cell_equal(columns[i][r], other.columns[i][r])) return false;
    }
  }
  return true;
}

}  // namespace minilake
