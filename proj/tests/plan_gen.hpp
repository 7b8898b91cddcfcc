#pragma once

// Seeded random plan ASTs for parser/printer round-trip checks. Only
// parseable shapes are produced: negative numbers appear as unary minus
// over a positive literal (that is what the parser builds), floats are
// finite, identifiers avoid reserved words.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "minilake/plan_ast.hpp"

namespace testutil {

class PlanGen {
 public:
  explicit PlanGen(uint64_t seed) : rng_(seed) {}

  minilake::Plan plan() {
    minilake::Plan p;
    p.source = table_name();
    size_t n = pick(0, 5);
    for (size_t i = 0; i < n; ++i) p.stages.push_back(stage());
    return p;
  }

  minilake::ExprPtr expr(int depth = 0) {
    using namespace minilake;
    // Bias toward leaves as depth grows.
    if (depth >= 4 || pick(0, 2) == 0) return leaf();
    if (pick(0, 3) == 0) {
      UnaryOp op = pick(0, 1) ? UnaryOp::Not : UnaryOp::Neg;
      return make_unary(op, expr(depth + 1));
    }
    static const BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul,
                                   BinaryOp::Div, BinaryOp::Eq,  BinaryOp::Ne,
                                   BinaryOp::Lt,  BinaryOp::Le,  BinaryOp::Gt,
                                   BinaryOp::Ge,  BinaryOp::And, BinaryOp::Or};
    return make_binary(ops[pick(0, 11)], expr(depth + 1), expr(depth + 1));
  }

 private:
  minilake::ExprPtr leaf() {
    using namespace minilake;
    switch (pick(0, 5)) {
      case 0: return make_column(column_name());
      case 1: return make_literal(int64_t{static_cast<int64_t>(pick(0, 100000))});
      case 2: {
        double v = static_cast<double>(pick(0, 1000000)) / 128.0;
        return make_literal(v);
      }
      case 3: {
        static const char* strs[] = {"", "plain", "it's", "tab\there",
                                     "line\nbreak", "back\\slash", "crlf\r"};
        return make_literal(std::string(strs[pick(0, 6)]));
      }
      case 4: return make_literal(pick(0, 1) == 1);
      default: return make_literal(std::monostate{});
    }
  }

  minilake::Stage stage() {
    using namespace minilake;
    switch (pick(0, 7)) {
      case 0: return FilterStage{expr()};
      case 1: {
        ProjectStage s;
        size_t n = pick(1, 3);
        for (size_t i = 0; i < n; ++i) s.columns.push_back(column_name());
        return s;
      }
      case 2: return ExtendStage{column_name(), expr()};
      case 3: return RenameStage{column_name(), column_name()};
      case 4: {
        JoinStage s;
        s.right_input = table_name();
        s.left_key = column_name();
        s.right_key = column_name();
        s.kind = pick(0, 1) ? JoinKind::Left : JoinKind::Inner;
        return s;
      }
      case 5: {
        AggregateStage s;
        size_t groups = pick(0, 2);
        for (size_t i = 0; i < groups; ++i) s.group_by.push_back(column_name());
        size_t items = pick(1, 2);
        for (size_t i = 0; i < items; ++i) {
          AggItem item;
          item.name = "m" + std::to_string(i);
          static const AggFn fns[] = {AggFn::Count, AggFn::Sum, AggFn::Min,
                                      AggFn::Max, AggFn::Avg};
          item.fn = fns[pick(0, 4)];
          item.column = item.fn == AggFn::Count && pick(0, 1) ? "*" : column_name();
          s.items.push_back(std::move(item));
        }
        return s;
      }
      case 6:
        return SortStage{column_name(),
                         pick(0, 1) ? SortDirection::Desc : SortDirection::Asc};
      default: return LimitStage{static_cast<uint64_t>(pick(0, 1000000))};
    }
  }

  std::string table_name() { return "t" + std::to_string(pick(0, 3)); }
  std::string column_name() { return "c" + std::to_string(pick(0, 7)); }

  size_t pick(size_t lo, size_t hi) {
    return std::uniform_int_distribution<size_t>(lo, hi)(rng_);
  }

  std::mt19937_64 rng_;
};

}  // namespace testutil
