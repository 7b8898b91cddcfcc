#include "minilake/eval.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <unordered_map>

#include "minilake/typecheck.hpp"

namespace minilake {

namespace {

[[noreturn]] void eval_fail(const std::string& what) {
  raise(Errc::EvalError, what);
}

bool is_int(const CellValue& v) { return std::holds_alternative<int64_t>(v); }
bool is_float(const CellValue& v) { return std::holds_alternative<double>(v); }

double to_double(const CellValue& v) {
  if (is_int(v)) return static_cast<double>(std::get<int64_t>(v));
  if (is_float(v)) return std::get<double>(v);
  eval_fail("numeric value expected");
}

// Two's-complement wrap-around keeps INT64 arithmetic defined everywhere.
int64_t wrap_add(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) + static_cast<uint64_t>(b));
}
int64_t wrap_sub(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) - static_cast<uint64_t>(b));
}
int64_t wrap_mul(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) * static_cast<uint64_t>(b));
}

CellValue eval_arithmetic(BinaryOp op, const CellValue& lhs, const CellValue& rhs) {
  if (is_null(lhs) || is_null(rhs)) return std::monostate{};
  if (is_int(lhs) && is_int(rhs)) {
    int64_t a = std::get<int64_t>(lhs);
    int64_t b = std::get<int64_t>(rhs);
    switch (op) {
      case BinaryOp::Add: return wrap_add(a, b);
      case BinaryOp::Sub: return wrap_sub(a, b);
      case BinaryOp::Mul: return wrap_mul(a, b);
      case BinaryOp::Div:
        if (b == 0) return std::monostate{};
        if (a == INT64_MIN && b == -1) return INT64_MIN;  // wraps
        return a / b;
      default: break;
    }
  }
  double a = to_double(lhs);
  double b = to_double(rhs);
  switch (op) {
    case BinaryOp::Add: return canonicalize_float(a + b);
    case BinaryOp::Sub: return canonicalize_float(a - b);
    case BinaryOp::Mul: return canonicalize_float(a * b);
    case BinaryOp::Div:
      if (b == 0.0) return std::monostate{};
      return canonicalize_float(a / b);
    default: break;
  }
  eval_fail("not an arithmetic operator");
}

// Spaceship over non-null cells; numeric mixes promote to double.
int compare_cells(const CellValue& a, const CellValue& b) {
  if (is_int(a) && is_int(b)) {
    int64_t x = std::get<int64_t>(a);
    int64_t y = std::get<int64_t>(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if ((is_int(a) || is_float(a)) && (is_int(b) || is_float(b))) {
    double x = to_double(a);
    double y = to_double(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (std::holds_alternative<std::string>(a) && std::holds_alternative<std::string>(b)) {
    return std::get<std::string>(a).compare(std::get<std::string>(b));
  }
  if (std::holds_alternative<bool>(a) && std::holds_alternative<bool>(b)) {
    int x = std::get<bool>(a) ? 1 : 0;
    int y = std::get<bool>(b) ? 1 : 0;
    return x - y;
  }
  eval_fail("incomparable values");
}

CellValue eval_comparison(BinaryOp op, const CellValue& lhs, const CellValue& rhs) {
  if (is_null(lhs) || is_null(rhs)) return std::monostate{};
  int c = compare_cells(lhs, rhs);
  switch (op) {
    case BinaryOp::Eq: return c == 0;
    case BinaryOp::Ne: return c != 0;
    case BinaryOp::Lt: return c < 0;
    case BinaryOp::Le: return c <= 0;
    case BinaryOp::Gt: return c > 0;
    case BinaryOp::Ge: return c >= 0;
    default: break;
  }
  eval_fail("not a comparison operator");
}

enum class Ternary { False, Null, True };

Ternary to_ternary(const CellValue& v) {
  if (is_null(v)) return Ternary::Null;
  if (!std::holds_alternative<bool>(v)) eval_fail("BOOL value expected");
  return std::get<bool>(v) ? Ternary::True : Ternary::False;
}

CellValue from_ternary(Ternary t) {
  switch (t) {
    case Ternary::False: return false;
    case Ternary::True: return true;
    case Ternary::Null: return std::monostate{};
  }
  return std::monostate{};
}

}  // namespace

CellValue eval_expr(const ExprPtr& expr, const Table& table, uint64_t row) {
  if (const auto* col = std::get_if<ColumnRef>(&expr->node)) {
    auto idx = table.schema.index_of(col->name);
    if (!idx) eval_fail("unknown column at eval time: " + col->name);
    return table.columns[*idx][row];
  }
  if (const auto* lit = std::get_if<Literal>(&expr->node)) {
    return lit->value;
  }
  if (const auto* un = std::get_if<UnaryExpr>(&expr->node)) {
    CellValue v = eval_expr(un->operand, table, row);
    if (is_null(v)) return std::monostate{};
    if (un->op == UnaryOp::Not) {
      return from_ternary(to_ternary(v) == Ternary::True ? Ternary::False
                                                         : Ternary::True);
    }
    if (is_int(v)) return wrap_sub(0, std::get<int64_t>(v));
    if (is_float(v)) return canonicalize_float(-std::get<double>(v));
    eval_fail("cannot negate a non-numeric value");
  }
  const auto& bin = std::get<BinaryExpr>(expr->node);
  switch (bin.op) {
    case BinaryOp::And: {
      // Kleene: false short-circuits, null is contagious otherwise.
      Ternary l = to_ternary(eval_expr(bin.lhs, table, row));
      if (l == Ternary::False) return false;
      Ternary r = to_ternary(eval_expr(bin.rhs, table, row));
      if (r == Ternary::False) return false;
      if (l == Ternary::Null || r == Ternary::Null) return std::monostate{};
      return true;
    }
    case BinaryOp::Or: {
      Ternary l = to_ternary(eval_expr(bin.lhs, table, row));
      if (l == Ternary::True) return true;
      Ternary r = to_ternary(eval_expr(bin.rhs, table, row));
      if (r == Ternary::True) return true;
      if (l == Ternary::Null || r == Ternary::Null) return std::monostate{};
      return false;
    }
    case BinaryOp::Add:
    case BinaryOp::Sub:
    case BinaryOp::Mul:
    case BinaryOp::Div:
      return eval_arithmetic(bin.op, eval_expr(bin.lhs, table, row),
                             eval_expr(bin.rhs, table, row));
    default:
      return eval_comparison(bin.op, eval_expr(bin.lhs, table, row),
                             eval_expr(bin.rhs, table, row));
  }
}

namespace {

// Hash-join key for grouping and joins: type-tagged canonical bytes.
// Numeric join keys across INT64/FLOAT64 compare via double.
std::string cell_key(const CellValue& v, bool force_double) {
  if (is_null(v)) return "n";
  if (is_int(v)) {
    if (force_double) {
      uint64_t bits = float_bits(static_cast<double>(std::get<int64_t>(v)));
      return "f" + std::to_string(bits);
    }
    return "i" + std::to_string(std::get<int64_t>(v));
  }
  if (is_float(v)) return "f" + std::to_string(float_bits(std::get<double>(v)));
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "b1" : "b0";
  return "s" + std::get<std::string>(v);
}

Table eval_filter(const FilterStage& stage, const Table& in) {
  Table out = Table::empty(in.schema);
  for (uint64_t r = 0; r < in.row_count; ++r) {
    CellValue v = eval_expr(stage.predicate, in, r);
    if (!is_null(v) && std::get<bool>(v)) out.append_row(in.row(r));
  }
  return out;
}

Table eval_project(const Schema& out_schema, const ProjectStage& stage,
                   const Table& in) {
  Table out = Table::empty(out_schema);
  std::vector<size_t> indices;
  for (const auto& name : stage.columns) indices.push_back(*in.schema.index_of(name));
  for (size_t c = 0; c < indices.size(); ++c) out.columns[c] = in.columns[indices[c]];
  out.row_count = in.row_count;
  return out;
}

Table eval_extend(const Schema& out_schema, const ExtendStage& stage,
                  const Table& in) {
  Table out = Table::empty(out_schema);
  std::vector<CellValue> fresh;
  fresh.reserve(in.row_count);
  for (uint64_t r = 0; r < in.row_count; ++r) {
    fresh.push_back(eval_expr(stage.expr, in, r));
  }
  auto replaced = in.schema.index_of(stage.name);
  for (size_t c = 0; c < out_schema.columns.size(); ++c) {
    if (replaced && c == *replaced) {
      out.columns[c] = fresh;
    } else if (c < in.columns.size()) {
      out.columns[c] = in.columns[c];
    } else {
      out.columns[c] = fresh;
    }
  }
  out.row_count = in.row_count;
  return out;
}

Table eval_join(const Schema& out_schema, const JoinStage& stage, const Table& left,
                const Table& right) {
  size_t lk = *left.schema.index_of(stage.left_key);
  size_t rk = *right.schema.index_of(stage.right_key);
  bool mixed_numeric =
      left.schema.columns[lk].type != right.schema.columns[rk].type;

  std::unordered_map<std::string, std::vector<uint64_t>> right_index;
  for (uint64_t r = 0; r < right.row_count; ++r) {
    const CellValue& key = right.columns[rk][r];
    if (is_null(key)) continue;  // null keys never match
    right_index[cell_key(key, mixed_numeric)].push_back(r);
  }

  Table out = Table::empty(out_schema);
  const size_t left_width = left.columns.size();
  for (uint64_t l = 0; l < left.row_count; ++l) {
    const CellValue& key = left.columns[lk][l];
    const std::vector<uint64_t>* matches = nullptr;
    if (!is_null(key)) {
      auto it = right_index.find(cell_key(key, mixed_numeric));
      if (it != right_index.end()) matches = &it->second;
    }
    if (matches) {
      for (uint64_t r : *matches) {
        std::vector<CellValue> row = left.row(l);
        for (size_t c = 0; c < right.columns.size(); ++c) {
          row.push_back(right.columns[c][r]);
        }
        out.append_row(row);
      }
    } else if (stage.kind == JoinKind::Left) {
      std::vector<CellValue> row = left.row(l);
      row.resize(left_width + right.columns.size(), std::monostate{});
      out.append_row(row);
    }
  }
  return out;
}

struct Accumulator {
  uint64_t rows = 0;
  uint64_t non_null = 0;
  int64_t int_sum = 0;
  double float_sum = 0;
  CellValue min_v = std::monostate{};
  CellValue max_v = std::monostate{};
};

Table eval_aggregate(const Schema& out_schema, const AggregateStage& stage,
                     const Table& in) {
  std::vector<size_t> key_idx;
  for (const auto& k : stage.group_by) key_idx.push_back(*in.schema.index_of(k));
  std::vector<size_t> item_idx;
  for (const auto& item : stage.items) {
    item_idx.push_back(item.column == "*" ? SIZE_MAX : *in.schema.index_of(item.column));
  }

  // group id -> accumulator per item, in first-appearance order
  std::unordered_map<std::string, size_t> group_of;
  std::vector<std::vector<CellValue>> group_keys;
  std::vector<std::vector<Accumulator>> accs;

  auto ensure_group = [&](const std::string& gk, const std::vector<CellValue>& keys) {
    auto it = group_of.find(gk);
    if (it != group_of.end()) return it->second;
    size_t id = group_keys.size();
    group_of.emplace(gk, id);
    group_keys.push_back(keys);
    accs.emplace_back(stage.items.size());
    return id;
  };

  if (stage.group_by.empty()) {
    ensure_group("", {});  // global group exists even for empty input
  }

  for (uint64_t r = 0; r < in.row_count; ++r) {
    std::string gk;
    std::vector<CellValue> keys;
    keys.reserve(key_idx.size());
    for (size_t k : key_idx) {
      const CellValue& v = in.columns[k][r];
      keys.push_back(v);
      gk += cell_key(v, false);
      gk.push_back('\x1f');
    }
    size_t gid = ensure_group(gk, keys);
    for (size_t i = 0; i < stage.items.size(); ++i) {
      Accumulator& acc = accs[gid][i];
      ++acc.rows;
      if (item_idx[i] == SIZE_MAX) continue;  // count(*) only needs rows
      const CellValue& v = in.columns[item_idx[i]][r];
      if (is_null(v)) continue;
      ++acc.non_null;
      if (is_int(v)) acc.int_sum = wrap_add(acc.int_sum, std::get<int64_t>(v));
      if (is_int(v) || is_float(v)) acc.float_sum += to_double(v);
      if (is_null(acc.min_v) || compare_cells(v, acc.min_v) < 0) acc.min_v = v;
      if (is_null(acc.max_v) || compare_cells(v, acc.max_v) > 0) acc.max_v = v;
    }
  }

  Table out = Table::empty(out_schema);
  for (size_t gid = 0; gid < group_keys.size(); ++gid) {
    std::vector<CellValue> row = group_keys[gid];
    for (size_t i = 0; i < stage.items.size(); ++i) {
      const Accumulator& acc = accs[gid][i];
      const AggItem& item = stage.items[i];
      switch (item.fn) {
        case AggFn::Count:
          row.push_back(static_cast<int64_t>(item.column == "*" ? acc.rows
                                                                : acc.non_null));
          break;
        case AggFn::Sum:
          if (acc.non_null == 0) {
            row.push_back(std::monostate{});
          } else if (out_schema.columns[stage.group_by.size() + i].type ==
                     ColumnType::Int64) {
            row.push_back(acc.int_sum);
          } else {
            row.push_back(canonicalize_float(acc.float_sum));
          }
          break;
        case AggFn::Avg:
          if (acc.non_null == 0) {
            row.push_back(std::monostate{});
          } else {
            row.push_back(canonicalize_float(acc.float_sum /
                                             static_cast<double>(acc.non_null)));
          }
          break;
        case AggFn::Min: row.push_back(acc.min_v); break;
        case AggFn::Max: row.push_back(acc.max_v); break;
      }
    }
    out.append_row(row);
  }
  return out;
}

Table eval_sort(const SortStage& stage, const Table& in) {
  size_t key = *in.schema.index_of(stage.key);
  std::vector<uint64_t> order(in.row_count);
  std::iota(order.begin(), order.end(), 0);
  const auto& col = in.columns[key];
  bool desc = stage.direction == SortDirection::Desc;
  std::stable_sort(order.begin(), order.end(), [&](uint64_t a, uint64_t b) {
    const CellValue& va = col[a];
    const CellValue& vb = col[b];
    if (is_null(va)) return false;  // nulls last either direction
    if (is_null(vb)) return true;
    int c = compare_cells(va, vb);
    return desc ? c > 0 : c < 0;
  });
  Table out = Table::empty(in.schema);
  for (uint64_t r : order) out.append_row(in.row(r));
  return out;
}

Table eval_limit(const LimitStage& stage, const Table& in) {
  Table out = Table::empty(in.schema);
  uint64_t n = std::min<uint64_t>(stage.limit, in.row_count);
  for (uint64_t r = 0; r < n; ++r) out.append_row(in.row(r));
  return out;
}

}  // namespace

Table eval_plan(const Plan& plan, const std::map<std::string, Table>& inputs) {
  auto src = inputs.find(plan.source);
  if (src == inputs.end()) {
    raise(Errc::UnknownInput, "unknown input: " + plan.source);
  }
  std::map<std::string, Schema> input_schemas;
  for (const auto& [name, table] : inputs) input_schemas.emplace(name, table.schema);

  Table current = src->second;
  for (const auto& stage : plan.stages) {
    Schema out_schema = typecheck_stage(stage, current.schema, input_schemas);
    if (const auto* f = std::get_if<FilterStage>(&stage)) {
      current = eval_filter(*f, current);
    } else if (const auto* p = std::get_if<ProjectStage>(&stage)) {
      current = eval_project(out_schema, *p, current);
    } else if (const auto* e = std::get_if<ExtendStage>(&stage)) {
      current = eval_extend(out_schema, *e, current);
    } else if (std::get_if<RenameStage>(&stage)) {
      current.schema = out_schema;
    } else if (const auto* j = std::get_if<JoinStage>(&stage)) {
      current = eval_join(out_schema, *j, current, inputs.at(j->right_input));
    } else if (const auto* a = std::get_if<AggregateStage>(&stage)) {
      current = eval_aggregate(out_schema, *a, current);
    } else if (const auto* s = std::get_if<SortStage>(&stage)) {
      current = eval_sort(*s, current);
    } else {
      current = eval_limit(std::get<LimitStage>(stage), current);
    }
  }
  current.validate();
  return current;
}

}  // namespace minilake
