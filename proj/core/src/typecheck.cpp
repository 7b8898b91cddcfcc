#include "minilake/typecheck.hpp"

#include <set>

namespace minilake {

namespace {

bool is_numeric(const std::optional<ColumnType>& t) {
  return t && (*t == ColumnType::Int64 || *t == ColumnType::Float64);
}

[[noreturn]] void type_fail(const std::string& what) {
  raise(Errc::TypeMismatch, what);
}

ExprType arithmetic_result(BinaryOp op, const ExprType& lhs, const ExprType& rhs) {
  if ((lhs.base && !is_numeric(lhs.base)) || (rhs.base && !is_numeric(rhs.base))) {
    type_fail("arithmetic needs numeric operands");
  }
  ExprType out;
  if (lhs.base == ColumnType::Float64 || rhs.base == ColumnType::Float64) {
    out.base = ColumnType::Float64;
  } else if (lhs.base && rhs.base) {
    out.base = ColumnType::Int64;
  } else {
    out.base = lhs.base ? lhs.base : rhs.base;  // may stay empty (null op null)
  }
  out.nullable = lhs.nullable || rhs.nullable || op == BinaryOp::Div;
  return out;
}

bool comparable(const ExprType& lhs, const ExprType& rhs, bool ordering) {
  if (!lhs.base || !rhs.base) return true;  // null compares with anything
  if (is_numeric(lhs.base) && is_numeric(rhs.base)) return true;
  if (lhs.base != rhs.base) return false;
  if (ordering && *lhs.base == ColumnType::Bool) return false;
  return true;
}

}  // namespace

ExprType typecheck_expr(const ExprPtr& expr, const Schema& schema) {
  if (const auto* col = std::get_if<ColumnRef>(&expr->node)) {
    const ColumnDef* def = schema.find(col->name);
    if (!def) {
      raise(Errc::UnknownColumn, "unknown column: " + col->name);
    }
    return {def->type, def->nullable};
  }
  if (const auto* lit = std::get_if<Literal>(&expr->node)) {
    if (is_null(lit->value)) return {std::nullopt, true};
    if (std::holds_alternative<int64_t>(lit->value)) return {ColumnType::Int64, false};
    if (std::holds_alternative<double>(lit->value)) return {ColumnType::Float64, false};
    if (std::holds_alternative<std::string>(lit->value)) return {ColumnType::String, false};
    return {ColumnType::Bool, false};
  }
  if (const auto* un = std::get_if<UnaryExpr>(&expr->node)) {
    ExprType t = typecheck_expr(un->operand, schema);
    if (un->op == UnaryOp::Not) {
      if (t.base && *t.base != ColumnType::Bool) type_fail("'not' needs a BOOL operand");
      return {ColumnType::Bool, true};
    }
    if (t.base && !is_numeric(t.base)) type_fail("negation needs a numeric operand");
    return t;
  }
  const auto& bin = std::get<BinaryExpr>(expr->node);
  ExprType lhs = typecheck_expr(bin.lhs, schema);
  ExprType rhs = typecheck_expr(bin.rhs, schema);
  switch (bin.op) {
    case BinaryOp::Add:
    case BinaryOp::Sub:
    case BinaryOp::Mul:
    case BinaryOp::Div:
      return arithmetic_result(bin.op, lhs, rhs);
    case BinaryOp::Eq:
    case BinaryOp::Ne:
      if (!comparable(lhs, rhs, false)) type_fail("incomparable operand types");
      return {ColumnType::Bool, true};
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
      if (!comparable(lhs, rhs, true)) type_fail("unorderable operand types");
      return {ColumnType::Bool, true};
    case BinaryOp::And:
    case BinaryOp::Or:
      if ((lhs.base && *lhs.base != ColumnType::Bool) ||
          (rhs.base && *rhs.base != ColumnType::Bool)) {
        type_fail("'and'/'or' need BOOL operands");
      }
      return {ColumnType::Bool, true};
  }
  type_fail("unhandled operator");
}

namespace {

// Appends a right-side column, suffixing "_r" until the name is unique.
std::string collision_free_name(const Schema& schema, std::string name) {
  while (schema.index_of(name)) name += "_r";
  return name;
}

Schema check_join(const JoinStage& join, const Schema& left,
                  const std::map<std::string, Schema>& inputs) {
  auto it = inputs.find(join.right_input);
  if (it == inputs.end()) {
    raise(Errc::UnknownInput, "unknown join input: " + join.right_input);
  }
  const Schema& right = it->second;
  const ColumnDef* lk = left.find(join.left_key);
  if (!lk) raise(Errc::UnknownColumn, "unknown join key: " + join.left_key);
  const ColumnDef* rk = right.find(join.right_key);
  if (!rk) {
    raise(Errc::UnknownColumn,
          "unknown join key: " + join.right_key + " in " + join.right_input);
  }
  bool both_numeric = (lk->type == ColumnType::Int64 || lk->type == ColumnType::Float64) &&
                      (rk->type == ColumnType::Int64 || rk->type == ColumnType::Float64);
  if (!both_numeric && lk->type != rk->type) {
    type_fail("join keys have incomparable types");
  }
  Schema out = left;
  for (const auto& col : right.columns) {
    ColumnDef def = col;
    def.name = collision_free_name(out, def.name);
    if (join.kind == JoinKind::Left) def.nullable = true;
    out.columns.push_back(std::move(def));
  }
  return out;
}

Schema check_aggregate(const AggregateStage& agg, const Schema& current) {
  Schema out;
  std::set<std::string> names;
  for (const auto& key : agg.group_by) {
    const ColumnDef* def = current.find(key);
    if (!def) raise(Errc::UnknownColumn, "unknown group key: " + key);
    if (!names.insert(key).second) type_fail("duplicate group key: " + key);
    out.columns.push_back(*def);
  }
  for (const auto& item : agg.items) {
    if (!names.insert(item.name).second) {
      type_fail("duplicate aggregate output name: " + item.name);
    }
    ColumnDef def;
    def.name = item.name;
    if (item.fn == AggFn::Count) {
      if (item.column != "*" && !current.find(item.column)) {
        raise(Errc::UnknownColumn, "unknown column: " + item.column);
      }
      def.type = ColumnType::Int64;
      def.nullable = false;
    } else {
      const ColumnDef* arg = current.find(item.column);
      if (!arg) raise(Errc::UnknownColumn, "unknown column: " + item.column);
      bool numeric = arg->type == ColumnType::Int64 || arg->type == ColumnType::Float64;
      switch (item.fn) {
        case AggFn::Sum:
          if (!numeric) type_fail("sum needs a numeric column");
          def.type = arg->type;
          break;
        case AggFn::Avg:
          if (!numeric) type_fail("avg needs a numeric column");
          def.type = ColumnType::Float64;
          break;
        case AggFn::Min:
        case AggFn::Max:
          if (!numeric && arg->type != ColumnType::String) {
            type_fail("min/max need a numeric or STRING column");
          }
          def.type = arg->type;
          break;
        case AggFn::Count:
          break;  // handled above
      }
      def.nullable = true;  // empty group -> null
    }
    out.columns.push_back(std::move(def));
  }
  return out;
}

}  // namespace

Schema typecheck_stage(const Stage& stage, const Schema& current,
                       const std::map<std::string, Schema>& inputs) {
  if (const auto* f = std::get_if<FilterStage>(&stage)) {
    ExprType t = typecheck_expr(f->predicate, current);
    if (t.base && *t.base != ColumnType::Bool) {
      type_fail("filter predicate must be BOOL");
    }
    return current;
  }
  if (const auto* p = std::get_if<ProjectStage>(&stage)) {
    Schema out;
    std::set<std::string> seen;
    for (const auto& name : p->columns) {
      const ColumnDef* def = current.find(name);
      if (!def) raise(Errc::UnknownColumn, "unknown column: " + name);
      if (!seen.insert(name).second) type_fail("duplicate projected column: " + name);
      out.columns.push_back(*def);
    }
    return out;
  }
  if (const auto* e = std::get_if<ExtendStage>(&stage)) {
    ExprType t = typecheck_expr(e->expr, current);
    if (!t.base) type_fail("cannot infer a type for column " + e->name);
    ColumnDef def{e->name, *t.base, t.nullable};
    Schema out = current;
    if (auto idx = out.index_of(e->name)) {
      out.columns[*idx] = def;  // extend over an existing name replaces it
    } else {
      out.columns.push_back(def);
    }
    return out;
  }
  if (const auto* r = std::get_if<RenameStage>(&stage)) {
    auto idx = current.index_of(r->from);
    if (!idx) raise(Errc::UnknownColumn, "unknown column: " + r->from);
    if (current.index_of(r->to)) type_fail("rename target already exists: " + r->to);
    Schema out = current;
    out.columns[*idx].name = r->to;
    return out;
  }
  if (const auto* j = std::get_if<JoinStage>(&stage)) {
    return check_join(*j, current, inputs);
  }
  if (const auto* a = std::get_if<AggregateStage>(&stage)) {
    return check_aggregate(*a, current);
  }
  if (const auto* s = std::get_if<SortStage>(&stage)) {
    if (!current.find(s->key)) raise(Errc::UnknownColumn, "unknown sort key: " + s->key);
    return current;
  }
  return current;  // limit
}

Schema typecheck(const Plan& plan, const std::map<std::string, Schema>& inputs) {
  auto it = inputs.find(plan.source);
  if (it == inputs.end()) {
    raise(Errc::UnknownInput, "unknown input: " + plan.source);
  }
  Schema current = it->second;
  current.validate();
  for (const auto& stage : plan.stages) {
    current = typecheck_stage(stage, current, inputs);
  }
  return current;
}

}  // namespace minilake
