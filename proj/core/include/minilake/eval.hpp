#pragma once

#include <map>
#include <string>

#include "minilake/plan_ast.hpp"
#include "minilake/table.hpp"

namespace minilake {

// Stage-at-a-time evaluation in written order, no optimizer.
//
// Null semantics: comparisons and logicals are three-valued (Kleene);
// filter keeps only rows where the predicate is exactly true; arithmetic
// with a null operand and division by zero yield null. Joins never match
// null keys. Aggregates ignore nulls except count(*); an empty value set
// leaves sum/min/max/avg null and count 0. Sort is stable with nulls
// last in both directions.
//
// Row order is deterministic: filter/extend preserve order, join emits
// nested-loop order (left row order, then right row order within a key),
// aggregate emits groups in first-appearance order.
//
// Inputs must have passed typecheck; anything the typechecker should
// have caught surfaces as EvalError.
Table eval_plan(const Plan& plan, const std::map<std::string, Table>& inputs);

// Single-row expression evaluation against a table row (also used by the
// verifier's aggregate checks and tests).
CellValue eval_expr(const ExprPtr& expr, const Table& table, uint64_t row);

}  // namespace minilake
