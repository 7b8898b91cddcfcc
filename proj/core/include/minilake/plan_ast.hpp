#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "minilake/table.hpp"

namespace minilake {

enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnaryOp { Not, Neg };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct ColumnRef {
  std::string name;
};
struct Literal {
  CellValue value;
};
struct UnaryExpr {
  UnaryOp op;
  ExprPtr operand;
};
struct BinaryExpr {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Expr {
  std::variant<ColumnRef, Literal, UnaryExpr, BinaryExpr> node;
};

ExprPtr make_column(std::string name);
ExprPtr make_literal(CellValue value);
ExprPtr make_unary(UnaryOp op, ExprPtr operand);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);

bool expr_equal(const ExprPtr& a, const ExprPtr& b);

struct FilterStage {
  ExprPtr predicate;
};
struct ProjectStage {
  std::vector<std::string> columns;
};
struct ExtendStage {
  std::string name;
  ExprPtr expr;
};
struct RenameStage {
  std::string from;
  std::string to;
};

enum class JoinKind { Inner, Left };
struct JoinStage {
  std::string right_input;
  std::string left_key;
  std::string right_key;
  JoinKind kind = JoinKind::Inner;
};

enum class AggFn { Count, Sum, Min, Max, Avg };
const char* agg_fn_name(AggFn fn);

struct AggItem {
  std::string name;
  AggFn fn = AggFn::Count;
  std::string column;  // "*" only for count(*)
};
struct AggregateStage {
  std::vector<std::string> group_by;
  std::vector<AggItem> items;
};

enum class SortDirection { Asc, Desc };
struct SortStage {
  std::string key;
  SortDirection direction = SortDirection::Asc;
};
struct LimitStage {
  uint64_t limit = 0;
};

using Stage = std::variant<FilterStage, ProjectStage, ExtendStage, RenameStage,
                           JoinStage, AggregateStage, SortStage, LimitStage>;

struct Plan {
  std::string source;
  std::vector<Stage> stages;

  // Source plus every join right side, in first-reference order, deduped.
  std::vector<std::string> input_names() const;
};

bool stage_equal(const Stage& a, const Stage& b);
bool plan_equal(const Plan& a, const Plan& b);

// Canonical single-line rendering. parse_plan(print_plan(p)) reproduces
// the AST exactly; printing is deterministic.
std::string print_plan(const Plan& plan);
std::string print_expr(const ExprPtr& expr);

}  // namespace minilake
