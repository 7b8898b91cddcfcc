#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "minilake/error.hpp"

namespace minilake {

enum class ColumnType { Int64, Float64, String, Bool };

const char* column_type_name(ColumnType t);
ColumnType column_type_from_name(const std::string& name);

struct ColumnDef {
  std::string name;
  ColumnType type = ColumnType::Int64;
  bool nullable = false;

  bool operator==(const ColumnDef&) const = default;
};

struct Schema {
  std::vector<ColumnDef> columns;

  // Unique identifier-shaped names; raises SchemaMismatch otherwise.
  void validate() const;
  std::optional<size_t> index_of(const std::string& name) const;
  const ColumnDef* find(const std::string& name) const;

  bool operator==(const Schema&) const = default;
};

// One cell: monostate is null. Int64/Float64/String/Bool mirror the
// declared column types.
using CellValue = std::variant<std::monostate, int64_t, double, std::string, bool>;

inline bool is_null(const CellValue& v) {
  return std::holds_alternative<std::monostate>(v);
}

// Any NaN payload collapses to the quiet-NaN pattern 0x7FF8000000000000
// so logically equal tables have byte-equal encodings.
double canonicalize_float(double v);
uint64_t float_bits(double v);

// Value equality with floats compared by canonical bit pattern (NaN equals
// NaN). This is the notion of "same logical table" the codec guarantees.
bool cell_equal(const CellValue& a, const CellValue& b);

struct Table {
  Schema schema;
  // columns[i][row] holds the value of schema.columns[i] at row.
  std::vector<std::vector<CellValue>> columns;
  uint64_t row_count = 0;

  static Table empty(Schema schema);

  // Cross-checks shape, null discipline, and value/type agreement.
  void validate() const;
  void append_row(const std::vector<CellValue>& row);
  std::vector<CellValue> row(uint64_t index) const;

  bool equals(const Table& other) const;
};

}  // namespace minilake
