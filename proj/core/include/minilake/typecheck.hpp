#pragma once

#include <map>
#include <string>

#include "minilake/plan_ast.hpp"
#include "minilake/table.hpp"

namespace minilake {

// Static type of an expression. base is empty only for a bare null
// literal whose type is still undetermined.
struct ExprType {
  std::optional<ColumnType> base;
  bool nullable = false;
};

// Output schema of the whole plan against the given input schemas.
// Arithmetic on INT64 pairs stays INT64, any FLOAT64 operand promotes;
// comparisons and logicals are nullable BOOL (three-valued logic).
// Join output is left columns then right columns, right-side name
// collisions suffixed "_r"; a left join makes right columns nullable.
Schema typecheck(const Plan& plan, const std::map<std::string, Schema>& inputs);

// Single-stage schema transition, shared with the evaluator so the two
// never disagree about output shapes.
Schema typecheck_stage(const Stage& stage, const Schema& current,
                       const std::map<std::string, Schema>& inputs);

ExprType typecheck_expr(const ExprPtr& expr, const Schema& schema);

}  // namespace minilake
