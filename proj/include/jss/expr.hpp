#pragma once
// Small expression language for metric coefficients, curve parameterizations
// and radial profiles.
//
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
//
// Names: variables x, y, t, r; constants pi, e. Functions: exp log sin cos
// sinh cosh sqrt tan.

#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>

#include "jss/errors.hpp"

namespace jss {

enum class Var : int { x = 0, y = 1, t = 2, r = 3 };

using VarValues = std::array<double, 4>;

class Expr {
 public:
  enum class Op { num, var, neg, add, sub, mul, div, pow, exp, log, sin, cos, sinh, cosh, sqrt, tan };

  Expr() : Expr(num(0.0)) {}

  static Expr num(double v) { return Expr(std::make_shared<Node>(Node{Op::num, v, 0, nullptr, nullptr})); }
  static Expr var(Var v) {
    return Expr(std::make_shared<Node>(Node{Op::var, 0.0, static_cast<int>(v), nullptr, nullptr}));
  }

  // Throws ParseError with a column relative to `text` (line set by caller via offsets).
  static Expr parse(std::string_view text, int line = 1, int column0 = 1);

  double eval(const VarValues& v) const { return eval_node(*node_, v); }
  double operator()(double x, double y) const { return eval({x, y, 0.0, 0.0}); }
  double at_t(double t) const { return eval({0.0, 0.0, t, 0.0}); }
  double at_r(double r) const { return eval({0.0, 0.0, 0.0, r}); }

  Expr derivative(Var v) const { return Expr(diff(node_, static_cast<int>(v))); }
  bool is_constant() const { return node_->op == Op::num; }
  std::string str() const { return to_string(*node_); }

 private:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;
  struct Node {
    Op op;
    double value;
    int var;
    NodePtr a, b;
  };
  NodePtr node_;

  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static NodePtr mk(Op op, NodePtr a, NodePtr b = nullptr) {
    // Constant folding keeps symbolic derivatives small.
    if (a && a->op == Op::num && (!b || b->op == Op::num)) {
      VarValues none{};
      Node tmp{op, 0.0, 0, a, b};
      return std::make_shared<Node>(Node{Op::num, eval_node(tmp, none), 0, nullptr, nullptr});
    }
    auto is = [](const NodePtr& p, double v) { return p && p->op == Op::num && p->value == v; };
    switch (op) {
      case Op::add:
        if (is(a, 0.0)) return b;
        if (is(b, 0.0)) return a;
        break;
      case Op::sub:
        if (is(b, 0.0)) return a;
        if (is(a, 0.0)) return mk(Op::neg, b);
        break;
      case Op::mul:
        if (is(a, 0.0) || is(b, 0.0)) return cnum(0.0);
        if (is(a, 1.0)) return b;
        if (is(b, 1.0)) return a;
        break;
      case Op::div:
        if (is(a, 0.0)) return cnum(0.0);
        if (is(b, 1.0)) return a;
        break;
      case Op::pow:
        if (is(b, 1.0)) return a;
        if (is(b, 0.0)) return cnum(1.0);
        break;
      case Op::neg:
        if (a->op == Op::neg) return a->a;
        break;
      default:
        break;
    }
    return std::make_shared<Node>(Node{op, 0.0, 0, std::move(a), std::move(b)});
  }
  static NodePtr cnum(double v) { return std::make_shared<Node>(Node{Op::num, v, 0, nullptr, nullptr}); }

  static double eval_node(const Node& n, const VarValues& v) {
    switch (n.op) {
      case Op::num: return n.value;
      case Op::var: return v[n.var];
      case Op::neg: return -eval_node(*n.a, v);
      case Op::add: return eval_node(*n.a, v) + eval_node(*n.b, v);
      case Op::sub: return eval_node(*n.a, v) - eval_node(*n.b, v);
      case Op::mul: return eval_node(*n.a, v) * eval_node(*n.b, v);
      case Op::div: return eval_node(*n.a, v) / eval_node(*n.b, v);
      case Op::pow: {
        double base = eval_node(*n.a, v);
        double ex = eval_node(*n.b, v);
        if (ex == 2.0) return base * base;
        return std::pow(base, ex);
      }
      case Op::exp: return std::exp(eval_node(*n.a, v));
      case Op::log: return std::log(eval_node(*n.a, v));
      case Op::sin: return std::sin(eval_node(*n.a, v));
      case Op::cos: return std::cos(eval_node(*n.a, v));
      case Op::sinh: return std::sinh(eval_node(*n.a, v));
      case Op::cosh: return std::cosh(eval_node(*n.a, v));
      case Op::sqrt: return std::sqrt(eval_node(*n.a, v));
      case Op::tan: return std::tan(eval_node(*n.a, v));
    }
    return 0.0;
  }

  static NodePtr diff(const NodePtr& n, int var) {
    const NodePtr& a = n->a;
    const NodePtr& b = n->b;
    switch (n->op) {
      case Op::num: return cnum(0.0);
      case Op::var: return cnum(n->var == var ? 1.0 : 0.0);
      case Op::neg: return mk(Op::neg, diff(a, var));
      case Op::add: return mk(Op::add, diff(a, var), diff(b, var));
      case Op::sub: return mk(Op::sub, diff(a, var), diff(b, var));
      case Op::mul: return mk(Op::add, mk(Op::mul, diff(a, var), b), mk(Op::mul, a, diff(b, var)));
      case Op::div:
        return mk(Op::div, mk(Op::sub, mk(Op::mul, diff(a, var), b), mk(Op::mul, a, diff(b, var))),
                  mk(Op::mul, b, b));
      case Op::pow: {
        NodePtr da = diff(a, var), db = diff(b, var);
        if (db->op == Op::num && db->value == 0.0) {
          // d(a^c) = c a^(c-1) a'
          return mk(Op::mul, mk(Op::mul, b, mk(Op::pow, a, mk(Op::sub, b, cnum(1.0)))), da);
        }
        // d(a^b) = a^b (b' log a + b a'/a)
        return mk(Op::mul, n,
                  mk(Op::add, mk(Op::mul, db, mk(Op::log, a)), mk(Op::div, mk(Op::mul, b, da), a)));
      }
      case Op::exp: return mk(Op::mul, n, diff(a, var));
      case Op::log: return mk(Op::div, diff(a, var), a);
      case Op::sin: return mk(Op::mul, mk(Op::cos, a), diff(a, var));
      case Op::cos: return mk(Op::neg, mk(Op::mul, mk(Op::sin, a), diff(a, var)));
      case Op::sinh: return mk(Op::mul, mk(Op::cosh, a), diff(a, var));
      case Op::cosh: return mk(Op::mul, mk(Op::sinh, a), diff(a, var));
      case Op::sqrt: return mk(Op::div, diff(a, var), mk(Op::mul, cnum(2.0), n));
      case Op::tan: {
        NodePtr c = mk(Op::cos, a);
        return mk(Op::div, diff(a, var), mk(Op::mul, c, c));
      }
    }
    return cnum(0.0);
  }

  static std::string to_string(const Node& n) {
    static const char* names[] = {"", "", "-", "+", "-", "*", "/", "^", "exp", "log",
                                  "sin", "cos", "sinh", "cosh", "sqrt", "tan"};
    static const char* vars[] = {"x", "y", "t", "r"};
    switch (n.op) {
      case Op::num: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        return buf;
      }
      case Op::var: return vars[n.var];
      case Op::neg: return "(-" + to_string(*n.a) + ")";
      case Op::add: case Op::sub: case Op::mul: case Op::div: case Op::pow:
        return "(" + to_string(*n.a) + names[static_cast<int>(n.op)] + to_string(*n.b) + ")";
      default:
        return std::string(names[static_cast<int>(n.op)]) + "(" + to_string(*n.a) + ")";
    }
  }

  friend class ExprParser;
};

class ExprParser {
 public:
  ExprParser(std::string_view s, int line, int col0) : s_(s), line_(line), col0_(col0) {}

  Expr::NodePtr parse_all() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  using NodePtr = Expr::NodePtr;
  using Op = Expr::Op;
  std::string_view s_;
  size_t pos_ = 0;
  int line_, col0_;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, col0_ + static_cast<int>(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = Expr::mk(Op::add, n, term());
      else if (eat('-')) n = Expr::mk(Op::sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = Expr::mk(Op::mul, n, unary());
      else if (eat('/')) n = Expr::mk(Op::div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (eat('-')) return Expr::mk(Op::neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return Expr::mk(Op::pow, base, unary());
    return base;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.data() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<size_t>(end - begin);
      return Expr::cnum(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      if (name == "pi") return Expr::cnum(std::numbers::pi);
      if (name == "e") return Expr::cnum(std::numbers::e);
      static const std::pair<const char*, Var> vars[] = {{"x", Var::x}, {"y", Var::y}, {"t", Var::t}, {"r", Var::r}};
      for (auto& [nm, v] : vars)
        if (name == nm) return Expr::var(v).node_;
      static const std::pair<const char*, Op> fns[] = {{"exp", Op::exp},   {"log", Op::log},   {"sin", Op::sin},
                                                       {"cos", Op::cos},   {"sinh", Op::sinh}, {"cosh", Op::cosh},
                                                       {"sqrt", Op::sqrt}, {"tan", Op::tan}};
      for (auto& [nm, op] : fns) {
        if (name == nm) {
          if (!eat('(')) fail("expected '(' after " + name);
          NodePtr arg = expr();
          if (!eat(')')) fail("expected ')'");
          return Expr::mk(op, arg);
        }
      }
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
};

inline Expr Expr::parse(std::string_view text, int line, int column0) {
  ExprParser p(text, line, column0);
  return Expr(p.parse_all());
}

}  // namespace jss
