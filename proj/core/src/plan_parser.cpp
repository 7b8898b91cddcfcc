#include "minilake/plan_parser.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>

namespace minilake {

namespace {

enum class Tok {
  Ident,
  Int,
  Float,
  Str,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Pipe,
  Assign,   // =
  Arrow,    // ->
  Eq,       // ==
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Plus,
  Minus,
  Star,
  Slash,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int64_t int_value = 0;
  double float_value = 0;
  int line = 1;
  int col = 1;
};

bool is_reserved_word(const std::string& s) {
  return s == "and" || s == "or" || s == "not" || s == "true" || s == "false" ||
         s == "null";
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= text_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = text_[pos_];
    if (isalpha_(c) || c == '_') return lex_ident(t);
    if (isdigit_(c)) return lex_number(t);
    if (c == '\'') return lex_string(t);
    switch (c) {
      case '(': advance(); t.kind = Tok::LParen; return t;
      case ')': advance(); t.kind = Tok::RParen; return t;
      case '[': advance(); t.kind = Tok::LBracket; return t;
      case ']': advance(); t.kind = Tok::RBracket; return t;
      case ',': advance(); t.kind = Tok::Comma; return t;
      case '|': advance(); t.kind = Tok::Pipe; return t;
      case '+': advance(); t.kind = Tok::Plus; return t;
      case '*': advance(); t.kind = Tok::Star; return t;
      case '/': advance(); t.kind = Tok::Slash; return t;
      case '-':
        advance();
        if (peek() == '>') {
          advance();
          t.kind = Tok::Arrow;
        } else {
          t.kind = Tok::Minus;
        }
        return t;
      case '=':
        advance();
        if (peek() == '=') {
          advance();
          t.kind = Tok::Eq;
        } else {
          t.kind = Tok::Assign;
        }
        return t;
      case '!':
        advance();
        if (peek() == '=') {
          advance();
          t.kind = Tok::Ne;
          return t;
        }
        fail(t.line, t.col, "expected '!='");
      case '<':
        advance();
        if (peek() == '=') {
          advance();
          t.kind = Tok::Le;
        } else {
          t.kind = Tok::Lt;
        }
        return t;
      case '>':
        advance();
        if (peek() == '=') {
          advance();
          t.kind = Tok::Ge;
        } else {
          t.kind = Tok::Gt;
        }
        return t;
      default:
        fail(t.line, t.col, std::string("unexpected character '") + c + "'");
    }
  }

  [[noreturn]] static void fail(int line, int col, const std::string& what) {
    raise(Errc::SyntaxError, "line " + std::to_string(line) + ", col " +
                                 std::to_string(col) + ": " + what);
  }

 private:
  static bool isalpha_(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }
  static bool isdigit_(char c) { return c >= '0' && c <= '9'; }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void advance() {
    if (pos_ < text_.size()) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  Token lex_ident(Token t) {
    std::string s;
    while (pos_ < text_.size() &&
           (isalpha_(text_[pos_]) || isdigit_(text_[pos_]) || text_[pos_] == '_')) {
      s.push_back(text_[pos_]);
      advance();
    }
    t.kind = Tok::Ident;
    t.text = std::move(s);
    return t;
  }

  Token lex_number(Token t) {
    std::string s;
    bool is_float = false;
    while (pos_ < text_.size() && isdigit_(text_[pos_])) {
      s.push_back(text_[pos_]);
      advance();
    }
    if (pos_ < text_.size() && text_[pos_] == '.') {
      is_float = true;
      s.push_back('.');
      advance();
      if (pos_ >= text_.size() || !isdigit_(text_[pos_])) {
        fail(t.line, t.col, "digit expected after '.'");
      }
      while (pos_ < text_.size() && isdigit_(text_[pos_])) {
        s.push_back(text_[pos_]);
        advance();
      }
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      is_float = true;
      s.push_back(text_[pos_]);
      advance();
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        s.push_back(text_[pos_]);
        advance();
      }
      if (pos_ >= text_.size() || !isdigit_(text_[pos_])) {
        fail(t.line, t.col, "digit expected in exponent");
      }
      while (pos_ < text_.size() && isdigit_(text_[pos_])) {
        s.push_back(text_[pos_]);
        advance();
      }
    }
    if (is_float) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        fail(t.line, t.col, "float literal out of range: " + s);
      }
      t.kind = Tok::Float;
      t.float_value = v;
    } else {
      int64_t v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail(t.line, t.col, "integer literal out of range: " + s);
      }
      t.kind = Tok::Int;
      t.int_value = v;
    }
    t.text = std::move(s);
    return t;
  }

  Token lex_string(Token t) {
    advance();  // opening quote
    std::string s;
    while (true) {
      if (pos_ >= text_.size()) fail(t.line, t.col, "unterminated string literal");
      char c = text_[pos_];
      if (c == '\'') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) fail(t.line, t.col, "unterminated string literal");
        char esc = text_[pos_];
        switch (esc) {
          case '\'': s.push_back('\''); break;
          case '\\': s.push_back('\\'); break;
          case 'n': s.push_back('\n'); break;
          case 't': s.push_back('\t'); break;
          case 'r': s.push_back('\r'); break;
          default:
            fail(line_, col_, std::string("unknown escape '\\") + esc + "'");
        }
        advance();
      } else if (c == '\n') {
        fail(t.line, t.col, "newline in string literal");
      } else {
        s.push_back(c);
        advance();
      }
    }
    t.kind = Tok::Str;
    t.text = std::move(s);
    return t;
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { cur_ = lexer_.next(); }

  Plan parse_plan() {
    Plan plan;
    expect_keyword("from");
    expect(Tok::LParen, "'('");
    plan.source = expect_ident();
    expect(Tok::RParen, "')'");
    while (cur_.kind == Tok::Pipe) {
      bump();
      plan.stages.push_back(parse_stage());
    }
    if (cur_.kind != Tok::End) {
      fail("expected '|' or end of plan");
    }
    return plan;
  }

  ExprPtr parse_expr_only() {
    ExprPtr e = parse_expr();
    if (cur_.kind != Tok::End) fail("expected end of expression");
    return e;
  }

 private:
  void bump() { cur_ = lexer_.next(); }

  [[noreturn]] void fail(const std::string& what) {
    std::string got = cur_.kind == Tok::End ? "end of input"
                      : cur_.text.empty()  ? "token"
                                           : "'" + cur_.text + "'";
    Lexer::fail(cur_.line, cur_.col, what + " (got " + got + ")");
  }

  void expect(Tok kind, const std::string& what) {
    if (cur_.kind != kind) fail("expected " + what);
    bump();
  }

  std::string expect_ident() {
    if (cur_.kind != Tok::Ident) fail("expected identifier");
    if (is_reserved_word(cur_.text)) {
      fail("'" + cur_.text + "' is a reserved word");
    }
    std::string s = cur_.text;
    bump();
    return s;
  }

  void expect_keyword(const std::string& kw) {
    if (cur_.kind != Tok::Ident || cur_.text != kw) fail("expected '" + kw + "'");
    bump();
  }

  bool at_keyword(const std::string& kw) const {
    return cur_.kind == Tok::Ident && cur_.text == kw;
  }

  Stage parse_stage() {
    if (cur_.kind != Tok::Ident) fail("expected stage name");
    std::string name = cur_.text;
    bump();
    expect(Tok::LParen, "'('");
    Stage stage = [&]() -> Stage {
      if (name == "filter") return FilterStage{parse_expr()};
      if (name == "project") return parse_project();
      if (name == "extend") return parse_extend();
      if (name == "rename") return parse_rename();
      if (name == "join") return parse_join();
      if (name == "agg") return parse_agg();
      if (name == "sort") return parse_sort();
      if (name == "limit") return parse_limit();
      fail("unknown stage '" + name + "'");
    }();
    expect(Tok::RParen, "')'");
    return stage;
  }

  Stage parse_project() {
    ProjectStage s;
    s.columns.push_back(expect_ident());
    while (cur_.kind == Tok::Comma) {
      bump();
      s.columns.push_back(expect_ident());
    }
    return s;
  }

  Stage parse_extend() {
    ExtendStage s;
    s.name = expect_ident();
    expect(Tok::Assign, "'='");
    s.expr = parse_expr();
    return s;
  }

  Stage parse_rename() {
    RenameStage s;
    s.from = expect_ident();
    expect(Tok::Arrow, "'->'");
    s.to = expect_ident();
    return s;
  }

  Stage parse_join() {
    JoinStage s;
    s.right_input = expect_ident();
    expect(Tok::Comma, "','");
    expect_keyword("on");
    expect(Tok::Assign, "'='");
    s.left_key = expect_ident();
    expect(Tok::Eq, "'=='");
    s.right_key = expect_ident();
    if (cur_.kind == Tok::Comma) {
      bump();
      expect_keyword("how");
      expect(Tok::Assign, "'='");
      if (at_keyword("inner")) {
        s.kind = JoinKind::Inner;
      } else if (at_keyword("left")) {
        s.kind = JoinKind::Left;
      } else {
        fail("expected 'inner' or 'left'");
      }
      bump();
    }
    return s;
  }

  Stage parse_agg() {
    AggregateStage s;
    expect_keyword("by");
    expect(Tok::Assign, "'='");
    expect(Tok::LBracket, "'['");
    if (cur_.kind != Tok::RBracket) {
      s.group_by.push_back(expect_ident());
      while (cur_.kind == Tok::Comma) {
        bump();
        s.group_by.push_back(expect_ident());
      }
    }
    expect(Tok::RBracket, "']'");
    while (cur_.kind == Tok::Comma) {
      bump();
      AggItem item;
      item.name = expect_ident();
      expect(Tok::Assign, "'='");
      std::string fn = expect_ident();
      if (fn == "count") item.fn = AggFn::Count;
      else if (fn == "sum") item.fn = AggFn::Sum;
      else if (fn == "min") item.fn = AggFn::Min;
      else if (fn == "max") item.fn = AggFn::Max;
      else if (fn == "avg") item.fn = AggFn::Avg;
      else fail("unknown aggregate function '" + fn + "'");
      expect(Tok::LParen, "'('");
      if (cur_.kind == Tok::Star) {
        if (item.fn != AggFn::Count) fail("'*' is only valid with count");
        item.column = "*";
        bump();
      } else {
        item.column = expect_ident();
      }
      expect(Tok::RParen, "')'");
      s.items.push_back(std::move(item));
    }
    if (s.items.empty()) fail("agg needs at least one aggregate item");
    return s;
  }

  Stage parse_sort() {
    SortStage s;
    s.key = expect_ident();
    if (at_keyword("asc")) {
      s.direction = SortDirection::Asc;
      bump();
    } else if (at_keyword("desc")) {
      s.direction = SortDirection::Desc;
      bump();
    }
    return s;
  }

  Stage parse_limit() {
    if (cur_.kind != Tok::Int || cur_.int_value < 0) {
      fail("expected non-negative integer");
    }
    LimitStage s{static_cast<uint64_t>(cur_.int_value)};
    bump();
    return s;
  }

  // or < and < not < comparison < additive < multiplicative < unary minus
  ExprPtr parse_expr() { return parse_or(); }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (at_keyword("or")) {
      bump();
      lhs = make_binary(BinaryOp::Or, std::move(lhs), parse_and());
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (at_keyword("and")) {
      bump();
      lhs = make_binary(BinaryOp::And, std::move(lhs), parse_not());
    }
    return lhs;
  }

  ExprPtr parse_not() {
    if (at_keyword("not")) {
      bump();
      return make_unary(UnaryOp::Not, parse_not());
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_additive();
    BinaryOp op;
    switch (cur_.kind) {
      case Tok::Eq: op = BinaryOp::Eq; break;
      case Tok::Ne: op = BinaryOp::Ne; break;
      case Tok::Lt: op = BinaryOp::Lt; break;
      case Tok::Le: op = BinaryOp::Le; break;
      case Tok::Gt: op = BinaryOp::Gt; break;
      case Tok::Ge: op = BinaryOp::Ge; break;
      default: return lhs;
    }
    bump();
    return make_binary(op, std::move(lhs), parse_additive());
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      BinaryOp op = cur_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      bump();
      lhs = make_binary(op, std::move(lhs), parse_multiplicative());
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      BinaryOp op = cur_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      bump();
      lhs = make_binary(op, std::move(lhs), parse_unary());
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (cur_.kind == Tok::Minus) {
      bump();
      return make_unary(UnaryOp::Neg, parse_unary());
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    switch (cur_.kind) {
      case Tok::Int: {
        ExprPtr e = make_literal(cur_.int_value);
        bump();
        return e;
      }
      case Tok::Float: {
        ExprPtr e = make_literal(cur_.float_value);
        bump();
        return e;
      }
      case Tok::Str: {
        ExprPtr e = make_literal(cur_.text);
        bump();
        return e;
      }
      case Tok::LParen: {
        bump();
        ExprPtr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        if (cur_.text == "true" || cur_.text == "false") {
          ExprPtr e = make_literal(cur_.text == "true");
          bump();
          return e;
        }
        if (cur_.text == "null") {
          bump();
          return make_literal(std::monostate{});
        }
        if (is_reserved_word(cur_.text)) {
          fail("'" + cur_.text + "' is a reserved word");
        }
        ExprPtr e = make_column(cur_.text);
        bump();
        return e;
      }
      default:
        fail("expected expression");
    }
  }

  Lexer lexer_;
  Token cur_;
};

}  // namespace

Plan parse_plan(std::string_view text) { return Parser(text).parse_plan(); }

ExprPtr parse_expr_text(std::string_view text) {
  return Parser(text).parse_expr_only();
}

}  // namespace minilake
