#include <string>

#include "doctest.h"
#include "minilake/error.hpp"
#include "minilake/plan_ast.hpp"
#include "minilake/plan_parser.hpp"
#include "plan_gen.hpp"

using namespace minilake;

namespace {

// Canonical text of a source string: parse, then print.
std::string canon(std::string_view text) { return print_plan(parse_plan(text)); }

}  // namespace

TEST_CASE("a full plan parses into the expected AST") {
  Plan p = parse_plan(
      "from(trips)\n"
      "  | filter((fare > 0.0) and (distance > 0.0))   # keep real trips\n"
      "  | extend(fare_per_mile = fare / distance)\n"
      "  | join(zones, on = pickup_zone == zone_id, how = left)\n"
      "  | rename(zone_name -> zone)\n"
      "  | project(trip_id, zone, fare_per_mile)\n"
      "  | agg(by = [zone], n = count(*), avg_fpm = avg(fare_per_mile))\n"
      "  | sort(n desc)\n"
      "  | limit(10)\n");
  CHECK(p.source == "trips");
  REQUIRE(p.stages.size() == 8);
  CHECK(std::holds_alternative<FilterStage>(p.stages[0]));
  CHECK(std::get<ExtendStage>(p.stages[1]).name == "fare_per_mile");
  const auto& join = std::get<JoinStage>(p.stages[2]);
  CHECK(join.right_input == "zones");
  CHECK(join.left_key == "pickup_zone");
  CHECK(join.right_key == "zone_id");
  CHECK(join.kind == JoinKind::Left);
  CHECK(std::get<RenameStage>(p.stages[3]).to == "zone");
  CHECK(std::get<ProjectStage>(p.stages[4]).columns ==
        std::vector<std::string>{"trip_id", "zone", "fare_per_mile"});
  const auto& agg = std::get<AggregateStage>(p.stages[5]);
  CHECK(agg.group_by == std::vector<std::string>{"zone"});
  REQUIRE(agg.items.size() == 2);
  CHECK(agg.items[0].fn == AggFn::Count);
  CHECK(agg.items[0].column == "*");
  CHECK(agg.items[1].fn == AggFn::Avg);
  CHECK(std::get<SortStage>(p.stages[6]).direction == SortDirection::Desc);
  CHECK(std::get<LimitStage>(p.stages[7]).limit == 10);
  CHECK(p.input_names() == std::vector<std::string>{"trips", "zones"});
}

TEST_CASE("printing is canonical and single-line") {
  CHECK(canon("from(t)") == "from(t)");
  CHECK(canon("from( t )|filter(a>1)") == "from(t) | filter(a > 1)");
  CHECK(canon("from(t) | join(u, on = a == b, how = inner)") ==
        "from(t) | join(u, on = a == b)");  // inner is the default
  CHECK(canon("from(t) | join(u, on = a == b, how = left)") ==
        "from(t) | join(u, on = a == b, how = left)");
  CHECK(canon("from(t) | sort(k asc)") == "from(t) | sort(k)");
  CHECK(canon("from(t) | agg(by = [], n = count(*))") ==
        "from(t) | agg(by = [], n = count(*))");
  // Composite subexpressions always get parentheses.
  CHECK(canon("from(t) | filter(a + b * c > 2)") ==
        "from(t) | filter((a + (b * c)) > 2)");
  CHECK(canon("from(t) | extend(x = not a and b or c)") ==
        "from(t) | extend(x = ((not a) and b) or c)");
}

TEST_CASE("operator precedence, loosest first: or, and, not, cmp, add, mul, neg") {
  CHECK(print_expr(parse_expr_text("a or b and c")) == "a or (b and c)");
  CHECK(print_expr(parse_expr_text("not a == b")) == "not (a == b)");
  CHECK(print_expr(parse_expr_text("a == b + c")) == "a == (b + c)");
  CHECK(print_expr(parse_expr_text("a + b * c")) == "a + (b * c)");
  CHECK(print_expr(parse_expr_text("-a * b")) == "(-a) * b");
  CHECK(print_expr(parse_expr_text("a - b - c")) == "(a - b) - c");  // left assoc
  CHECK(print_expr(parse_expr_text("a / b / c")) == "(a / b) / c");
  CHECK(print_expr(parse_expr_text("not not a")) == "not (not a)");
  CHECK(print_expr(parse_expr_text("--a")) == "-(-a)");
  CHECK(print_expr(parse_expr_text("(a + b) * c")) == "(a + b) * c");
  // Comparisons do not chain.
  CHECK_THROWS_AS(parse_expr_text("a < b < c"), Error);
}

TEST_CASE("literals") {
  CHECK(print_expr(parse_expr_text("42")) == "42");
  CHECK(print_expr(parse_expr_text("-7")) == "-7");  // unary minus over 7
  CHECK(print_expr(parse_expr_text("3.5")) == "3.5");
  CHECK(print_expr(parse_expr_text("1e3")) == "1000.0");  // '.' forced back in
  CHECK(print_expr(parse_expr_text("2.5e-2")) == "0.025");
  CHECK(print_expr(parse_expr_text("0.1")) == "0.1");  // shortest round-trip
  CHECK(print_expr(parse_expr_text("'hi'")) == "'hi'");
  CHECK(print_expr(parse_expr_text("'it\\'s'")) == "'it\\'s'");
  CHECK(print_expr(parse_expr_text("'a\\nb\\tc\\rd\\\\e'")) ==
        "'a\\nb\\tc\\rd\\\\e'");
  CHECK(print_expr(parse_expr_text("true")) == "true");
  CHECK(print_expr(parse_expr_text("false")) == "false");
  CHECK(print_expr(parse_expr_text("null")) == "null");

  ExprPtr e = parse_expr_text("'it\\'s'");
  CHECK(std::get<Literal>(e->node).value == CellValue{std::string("it's")});
}

TEST_CASE("syntax errors carry line and column") {
  CHECK_THROWS_WITH_AS(parse_plan("from(trips | oops"),
                       doctest::Contains("line 1"), Error);
  CHECK_THROWS_WITH_AS(parse_plan("from(t)\n | filter(a >)"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_WITH_AS(parse_plan("from(t)\n\n | blah(1)"),
                       doctest::Contains("line 3"), Error);
  // Column points at the offending token.
  CHECK_THROWS_WITH_AS(parse_plan("from(%)"), doctest::Contains("col 6"), Error);
}

TEST_CASE("rejected inputs") {
  CHECK_THROWS_AS(parse_plan(""), Error);
  CHECK_THROWS_AS(parse_plan("from()"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) |"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | filter(a) extra"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | unknown(1)"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | limit(-1)"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | limit(1.5)"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | agg(by = [a])"), Error);  // no items
  CHECK_THROWS_AS(parse_plan("from(t) | agg(by = [a], n = sum(*))"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | agg(by = [a], n = median(x))"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | join(u, on = a = b)"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | join(u, on = a == b, how = outer)"), Error);
  CHECK_THROWS_AS(parse_plan("from(t) | rename(a => b)"), Error);
  CHECK_THROWS_AS(parse_plan("from(null)"), Error);  // reserved word as ident
  CHECK_THROWS_AS(parse_plan("from(t) | project(true)"), Error);
  CHECK_THROWS_AS(parse_expr_text("'unterminated"), Error);
  CHECK_THROWS_AS(parse_expr_text("'bad\\qescape'"), Error);
  CHECK_THROWS_AS(parse_expr_text("'line\nbreak'"), Error);
  CHECK_THROWS_AS(parse_expr_text("1."), Error);
  CHECK_THROWS_AS(parse_expr_text("1e"), Error);
  CHECK_THROWS_AS(parse_expr_text("99999999999999999999"), Error);
  CHECK_THROWS_AS(parse_expr_text("a ! b"), Error);
  CHECK_THROWS_AS(parse_expr_text("a & b"), Error);
  CHECK_THROWS_AS(parse_expr_text(""), Error);
}

TEST_CASE("parse-print round trip holds on 500 generated plans") {
  int checked = 0;
  for (uint64_t seed = 0; seed < 500; ++seed) {
    testutil::PlanGen gen(seed);
    Plan original = gen.plan();
    std::string text = print_plan(original);
    CAPTURE(text);
    Plan reparsed = parse_plan(text);
    REQUIRE(plan_equal(original, reparsed));
    REQUIRE(print_plan(reparsed) == text);  // printing is a fixed point
    ++checked;
  }
  CHECK(checked == 500);
}

TEST_CASE("generated standalone expressions round-trip too") {
  for (uint64_t seed = 1000; seed < 1200; ++seed) {
    testutil::PlanGen gen(seed);
    ExprPtr e = gen.expr();
    std::string text = print_expr(e);
    CAPTURE(text);
    ExprPtr back = parse_expr_text(text);
    REQUIRE(expr_equal(e, back));
    REQUIRE(print_expr(back) == text);
  }
}
