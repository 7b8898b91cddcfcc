#include "minilake/plan_ast.hpp"

#include <charconv>
#include <cmath>

namespace minilake {

ExprPtr make_column(std::string name) {
  return std::make_shared<Expr>(Expr{ColumnRef{std::move(name)}});
}
ExprPtr make_literal(CellValue value) {
  return std::make_shared<Expr>(Expr{Literal{std::move(value)}});
}
ExprPtr make_unary(UnaryOp op, ExprPtr operand) {
  return std::make_shared<Expr>(Expr{UnaryExpr{op, std::move(operand)}});
}
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<Expr>(Expr{BinaryExpr{op, std::move(lhs), std::move(rhs)}});
}

const char* agg_fn_name(AggFn fn) {
  switch (fn) {
    case AggFn::Count: return "count";
    case AggFn::Sum: return "sum";
    case AggFn::Min: return "min";
    case AggFn::Max: return "max";
    case AggFn::Avg: return "avg";
  }
  return "?";
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* ca = std::get_if<ColumnRef>(&a->node)) {
    return ca->name == std::get<ColumnRef>(b->node).name;
  }
  if (const auto* la = std::get_if<Literal>(&a->node)) {
    return cell_equal(la->value, std::get<Literal>(b->node).value);
  }
  if (const auto* ua = std::get_if<UnaryExpr>(&a->node)) {
    const auto& ub = std::get<UnaryExpr>(b->node);
    return ua->op == ub.op && expr_equal(ua->operand, ub.operand);
  }
  const auto& ba = std::get<BinaryExpr>(a->node);
  const auto& bb = std::get<BinaryExpr>(b->node);
  return ba.op == bb.op && expr_equal(ba.lhs, bb.lhs) && expr_equal(ba.rhs, bb.rhs);
}

std::vector<std::string> Plan::input_names() const {
  std::vector<std::string> names{source};
  for (const auto& stage : stages) {
    if (const auto* join = std::get_if<JoinStage>(&stage)) {
      bool seen = false;
      for (const auto& n : names) seen = seen || n == join->right_input;
      if (!seen) names.push_back(join->right_input);
    }
  }
  return names;
}

bool stage_equal(const Stage& a, const Stage& b) {
  if (a.index() != b.index()) return false;
  if (const auto* fa = std::get_if<FilterStage>(&a)) {
    return expr_equal(fa->predicate, std::get<FilterStage>(b).predicate);
  }
  if (const auto* pa = std::get_if<ProjectStage>(&a)) {
    return pa->columns == std::get<ProjectStage>(b).columns;
  }
  if (const auto* ea = std::get_if<ExtendStage>(&a)) {
    const auto& eb = std::get<ExtendStage>(b);
    return ea->name == eb.name && expr_equal(ea->expr, eb.expr);
  }
  if (const auto* ra = std::get_if<RenameStage>(&a)) {
    const auto& rb = std::get<RenameStage>(b);
    return ra->from == rb.from && ra->to == rb.to;
  }
  if (const auto* ja = std::get_if<JoinStage>(&a)) {
    const auto& jb = std::get<JoinStage>(b);
    return ja->right_input == jb.right_input && ja->left_key == jb.left_key &&
           ja->right_key == jb.right_key && ja->kind == jb.kind;
  }
  if (const auto* ga = std::get_if<AggregateStage>(&a)) {
    const auto& gb = std::get<AggregateStage>(b);
    if (ga->group_by != gb.group_by || ga->items.size() != gb.items.size()) {
      return false;
    }
    for (size_t i = 0; i < ga->items.size(); ++i) {
      const auto& ia = ga->items[i];
      const auto& ib = gb.items[i];
      if (ia.name != ib.name || ia.fn != ib.fn || ia.column != ib.column) {
        return false;
      }
    }
    return true;
  }
  if (const auto* sa = std::get_if<SortStage>(&a)) {
    const auto& sb = std::get<SortStage>(b);
    return sa->key == sb.key && sa->direction == sb.direction;
  }
  return std::get<LimitStage>(a).limit == std::get<LimitStage>(b).limit;
}

bool plan_equal(const Plan& a, const Plan& b) {
  if (a.source != b.source || a.stages.size() != b.stages.size()) return false;
  for (size_t i = 0; i < a.stages.size(); ++i) {
    if (!stage_equal(a.stages[i], b.stages[i])) return false;
  }
  return true;
}

namespace {

std::string format_float_literal(double v) {
  // Shortest round-trip form; force a '.' so it re-lexes as a float.
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string format_string_literal(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    switch (c) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out += "'";
  return out;
}

const char* binary_op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
  }
  return "?";
}

bool is_composite(const ExprPtr& e) {
  return std::holds_alternative<UnaryExpr>(e->node) ||
         std::holds_alternative<BinaryExpr>(e->node);
}

// Composite subexpressions are always parenthesized, so the output needs
// no precedence knowledge to re-parse.
void print_expr_rec(const ExprPtr& e, bool parenthesize, std::string& out) {
  if (parenthesize && is_composite(e)) {
    out.push_back('(');
    print_expr_rec(e, false, out);
    out.push_back(')');
    return;
  }
  if (const auto* col = std::get_if<ColumnRef>(&e->node)) {
    out += col->name;
  } else if (const auto* lit = std::get_if<Literal>(&e->node)) {
    if (is_null(lit->value)) {
      out += "null";
    } else if (const auto* i = std::get_if<int64_t>(&lit->value)) {
      out += std::to_string(*i);
    } else if (const auto* d = std::get_if<double>(&lit->value)) {
      out += format_float_literal(*d);
    } else if (const auto* s = std::get_if<std::string>(&lit->value)) {
      out += format_string_literal(*s);
    } else {
      out += std::get<bool>(lit->value) ? "true" : "false";
    }
  } else if (const auto* un = std::get_if<UnaryExpr>(&e->node)) {
    out += un->op == UnaryOp::Not ? "not " : "-";
    print_expr_rec(un->operand, true, out);
  } else {
    const auto& bin = std::get<BinaryExpr>(e->node);
    print_expr_rec(bin.lhs, true, out);
    out.push_back(' ');
    out += binary_op_text(bin.op);
    out.push_back(' ');
    print_expr_rec(bin.rhs, true, out);
  }
}

void print_stage(const Stage& stage, std::string& out) {
  if (const auto* f = std::get_if<FilterStage>(&stage)) {
    out += "filter(";
    print_expr_rec(f->predicate, false, out);
    out += ")";
  } else if (const auto* p = std::get_if<ProjectStage>(&stage)) {
    out += "project(";
    for (size_t i = 0; i < p->columns.size(); ++i) {
      if (i) out += ", ";
      out += p->columns[i];
    }
    out += ")";
  } else if (const auto* e = std::get_if<ExtendStage>(&stage)) {
    out += "extend(" + e->name + " = ";
    print_expr_rec(e->expr, false, out);
    out += ")";
  } else if (const auto* r = std::get_if<RenameStage>(&stage)) {
    out += "rename(" + r->from + " -> " + r->to + ")";
  } else if (const auto* j = std::get_if<JoinStage>(&stage)) {
    out += "join(" + j->right_input + ", on = " + j->left_key + " == " + j->right_key;
    if (j->kind == JoinKind::Left) out += ", how = left";
    out += ")";
  } else if (const auto* a = std::get_if<AggregateStage>(&stage)) {
    out += "agg(by = [";
    for (size_t i = 0; i < a->group_by.size(); ++i) {
      if (i) out += ", ";
      out += a->group_by[i];
    }
    out += "]";
    for (const auto& item : a->items) {
      out += ", " + item.name + " = " + agg_fn_name(item.fn) + "(" + item.column + ")";
    }
    out += ")";
  } else if (const auto* s = std::get_if<SortStage>(&stage)) {
    out += "sort(" + s->key;
    if (s->direction == SortDirection::Desc) out += " desc";
    out += ")";
  } else {
    out += "limit(" + std::to_string(std::get<LimitStage>(stage).limit) + ")";
  }
}

}  // namespace

std::string print_expr(const ExprPtr& expr) {
  std::string out;
  print_expr_rec(expr, false, out);
  return out;
}

std::string print_plan(const Plan& plan) {
  std::string out = "from(" + plan.source + ")";
  for (const auto& stage : plan.stages) {
    out += " | ";
    print_stage(stage, out);
  }
  return out;
}

}  // namespace minilake
