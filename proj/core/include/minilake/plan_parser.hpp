#pragma once

#include <string_view>

#include "minilake/plan_ast.hpp"

namespace minilake {

// Recursive-descent parser for the plan DSL:
//
//   plan  := "from" "(" ident ")" ("|" stage)*
//   stage := filter(expr) | project(ident, ...) | extend(ident = expr)
//          | rename(ident -> ident)
//          | join(ident, on = ident == ident [, how = inner|left])
//          | agg(by = [ident, ...], ident = aggfn(ident|*), ...)
//          | sort(ident [asc|desc]) | limit(uint)
//
// Expression precedence, loosest first: or, and, not, comparison,
// additive, multiplicative, unary minus. Literals are integers, decimal
// floats, single-quoted strings (backslash escapes), true/false/null.
// SyntaxError messages carry line and column.
Plan parse_plan(std::string_view text);

// Standalone expression parse with the same lexer and precedence.
ExprPtr parse_expr_text(std::string_view text);

}  // namespace minilake
