#include "semidiag/mexpr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "semidiag/errors.hpp"

namespace semidiag::mexpr {

namespace {

using NodePtr = std::shared_ptr<const Node>;

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t;
    t.span = {line_, col_, static_cast<int>(pos_), 0};
    if (pos_ >= src_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t start = pos_;
      while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
        advance();
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        size_t save = pos_;
        int save_col = col_;
        advance();
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
        if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
        } else {
          pos_ = save;
          col_ = save_col;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src_.substr(start, pos_ - start));
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size())
        throw ParseError("malformed number '" + t.text + "'", t.span.line, t.span.column);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        advance();
      t.kind = Tok::Ident;
      t.text = std::string(src_.substr(start, pos_ - start));
    } else {
      switch (c) {
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '*': t.kind = Tok::Star; break;
        case '/': t.kind = Tok::Slash; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case ',': t.kind = Tok::Comma; break;
        default:
          throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
      }
      t.text = std::string(1, c);
      advance();
    }
    t.span.length = static_cast<int>(pos_) - t.span.offset;
    return t;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

NodePtr make(NodeKind kind, SourceSpan span, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->span = span;
  n->args = std::move(args);
  return n;
}

class Parser {
 public:
  Parser(std::string_view src, Domain& domain) : lex_(src), src_(src), domain_(domain) { cur_ = lex_.next(); }

  NodePtr parse_all() {
    NodePtr e = expr();
    if (cur_.kind != Tok::End) fail("unexpected '" + cur_.text + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur_.span.line, cur_.span.column);
  }
  void expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    cur_ = lex_.next();
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      NodeKind k = cur_.kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub;
      SourceSpan sp = cur_.span;
      cur_ = lex_.next();
      lhs = make(k, sp, {lhs, term()});
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = factor();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      NodeKind k = cur_.kind == Tok::Star ? NodeKind::Mul : NodeKind::Div;
      SourceSpan sp = cur_.span;
      cur_ = lex_.next();
      lhs = make(k, sp, {lhs, factor()});
    }
    return lhs;
  }

  NodePtr factor() {
    if (cur_.kind == Tok::Minus) {
      SourceSpan sp = cur_.span;
      cur_ = lex_.next();
      return make(NodeKind::Neg, sp, {factor()});
    }
    return atom();
  }

  NodePtr atom() {
    Token t = cur_;
    if (t.kind == Tok::Number) {
      cur_ = lex_.next();
      auto n = std::make_shared<Node>();
      n->kind = NodeKind::Literal;
      n->value = t.number;
      n->span = t.span;
      return n;
    }
    if (t.kind == Tok::LParen) {
      cur_ = lex_.next();
      NodePtr e = expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (t.kind != Tok::Ident) fail(t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'");
    cur_ = lex_.next();
    if (t.text == "i") {
      auto n = std::make_shared<Node>();
      n->kind = NodeKind::Literal;
      n->value = kI;
      n->span = t.span;
      return n;
    }
    if (t.text == "x") return make(NodeKind::VarX, t.span);
    if (t.text == "h") return make(NodeKind::VarH, t.span);
    if (t.text == "pow") {
      expect(Tok::LParen, "'(' after pow");
      NodePtr base = expr();
      expect(Tok::Comma, "',' in pow");
      bool negative = false;
      if (cur_.kind == Tok::Minus) {
        negative = true;
        cur_ = lex_.next();
      } else if (cur_.kind == Tok::Plus) {
        cur_ = lex_.next();
      }
      if (cur_.kind != Tok::Number || cur_.text.find_first_not_of("0123456789") != std::string::npos)
        fail("pow exponent must be an integer literal");
      int k = 0;
      std::from_chars(cur_.text.data(), cur_.text.data() + cur_.text.size(), k);
      cur_ = lex_.next();
      expect(Tok::RParen, "')' after pow exponent");
      auto n = std::make_shared<Node>();
      n->kind = NodeKind::Pow;
      n->exponent = negative ? -k : k;
      n->args = {base};
      n->span = t.span;
      return n;
    }
    NodeKind k;
    if (t.text == "exp") k = NodeKind::Exp;
    else if (t.text == "tanh") k = NodeKind::Tanh;
    else if (t.text == "sin") k = NodeKind::Sin;
    else if (t.text == "cos") k = NodeKind::Cos;
    else if (t.text == "log") k = NodeKind::Log;
    else throw ParseError("unknown identifier '" + t.text + "'", t.span.line, t.span.column);
    int open = cur_.span.offset;
    expect(Tok::LParen, "'(' after function name");
    NodePtr arg = expr();
    int close = cur_.span.offset;
    expect(Tok::RParen, "')'");
    if (k == NodeKind::Log)
      domain_.branch_cuts.push_back("log" + std::string(src_.substr(open, close - open + 1)));
    return make(k, t.span, {arg});
  }

  Lexer lex_;
  std::string_view src_;
  Domain& domain_;
  Token cur_;
};

std::string where(const Node& n) {
  return " (line " + std::to_string(n.span.line) + ", column " + std::to_string(n.span.column) + ")";
}

cplx eval_node(const Node& n, cplx x, double h) {
  switch (n.kind) {
    case NodeKind::Literal: return n.value;
    case NodeKind::VarX: return x;
    case NodeKind::VarH: return h;
    case NodeKind::Add: return eval_node(*n.args[0], x, h) + eval_node(*n.args[1], x, h);
    case NodeKind::Sub: return eval_node(*n.args[0], x, h) - eval_node(*n.args[1], x, h);
    case NodeKind::Mul: return eval_node(*n.args[0], x, h) * eval_node(*n.args[1], x, h);
    case NodeKind::Div: {
      cplx num = eval_node(*n.args[0], x, h);
      cplx den = eval_node(*n.args[1], x, h);
      if (den == 0.0) throw EvalError("division by zero" + where(n), x);
      return num / den;
    }
    case NodeKind::Neg: return -eval_node(*n.args[0], x, h);
    case NodeKind::Pow: {
      cplx b = eval_node(*n.args[0], x, h);
      int k = n.exponent;
      if (k < 0 && b == 0.0) throw EvalError("pow of zero with negative exponent" + where(n), x);
      cplx r = 1.0;
      cplx base = k < 0 ? 1.0 / b : b;
      for (unsigned e = static_cast<unsigned>(k < 0 ? -k : k); e; e >>= 1) {
        if (e & 1u) r *= base;
        base *= base;
      }
      return r;
    }
    case NodeKind::Exp: return std::exp(eval_node(*n.args[0], x, h));
    case NodeKind::Tanh: {
      cplx z = eval_node(*n.args[0], x, h);
      if (std::abs(z.real()) < 20.0) {
        cplx c = std::cosh(z);
        if (std::abs(c) < kTanhPoleTolerance * std::abs(std::sinh(z)))
          throw EvalError("tanh pole" + where(n), x);
      }
      return std::tanh(z);
    }
    case NodeKind::Sin: return std::sin(eval_node(*n.args[0], x, h));
    case NodeKind::Cos: return std::cos(eval_node(*n.args[0], x, h));
    case NodeKind::Log: {
      cplx z = eval_node(*n.args[0], x, h);
      if (z == 0.0) throw EvalError("log of zero" + where(n), x);
      return std::log(z);
    }
  }
  return 0.0;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string print_node(const Node& n) {
  auto bin = [&](const char* op) {
    return "(" + print_node(*n.args[0]) + " " + op + " " + print_node(*n.args[1]) + ")";
  };
  auto fn = [&](const char* name) { return std::string(name) + "(" + print_node(*n.args[0]) + ")"; };
  switch (n.kind) {
    case NodeKind::Literal: {
      double re = n.value.real(), im = n.value.imag();
      if (im == 0.0) return re < 0 ? "(-" + fmt_double(-re) + ")" : fmt_double(re);
      std::string ims = im == 1.0 ? "i" : "(" + fmt_double(im) + " * i)";
      if (re == 0.0) return ims;
      return "(" + fmt_double(re) + " + " + ims + ")";
    }
    case NodeKind::VarX: return "x";
    case NodeKind::VarH: return "h";
    case NodeKind::Add: return bin("+");
    case NodeKind::Sub: return bin("-");
    case NodeKind::Mul: return bin("*");
    case NodeKind::Div: return bin("/");
    case NodeKind::Neg: return "(-" + print_node(*n.args[0]) + ")";
    case NodeKind::Pow: return "pow(" + print_node(*n.args[0]) + ", " + std::to_string(n.exponent) + ")";
    case NodeKind::Exp: return fn("exp");
    case NodeKind::Tanh: return fn("tanh");
    case NodeKind::Sin: return fn("sin");
    case NodeKind::Cos: return fn("cos");
    case NodeKind::Log: return fn("log");
  }
  return "";
}

}  // namespace

Expression::Expression() : root_(std::make_shared<Node>(Node{NodeKind::Literal, 0.0, 0, {}, {}})), source_("0") {}

Expression Expression::parse(std::string_view source) {
  Expression e;
  Parser p(source, e.domain_);
  e.root_ = p.parse_all();
  e.source_ = std::string(source);
  return e;
}

Expression Expression::constant(cplx value) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Literal;
  n->value = value;
  e.root_ = n;
  e.source_ = print_node(*n);
  return e;
}

cplx Expression::eval(cplx x, double h) const {
  cplx v = eval_node(*root_, x, h);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw EvalError("non-finite value of '" + source_ + "'", x);
  return v;
}

std::string Expression::to_string() const { return print_node(*root_); }

bool Expression::is_zero() const { return root_->kind == NodeKind::Literal && root_->value == 0.0; }

}  // namespace semidiag::mexpr
