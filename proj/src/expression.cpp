#include "spme/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <vector>

namespace spme {

enum class Op { constant, variable, add, sub, mul, neg, pow, sin, cos, exp };

struct Expression::Node {
  Op op;
  double value = 0.0;  // constant
  int axis = 0;        // variable
  int power = 0;       // pow
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::constant;
  n->value = v;
  return n;
}

NodePtr make_var(int axis) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::variable;
  n->axis = axis;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }

NodePtr make(Op op, NodePtr a, NodePtr b = nullptr, int power = 0) {
  // Constant folding and the usual identities keep derivative trees small.
  if (a->op == Op::constant && (!b || b->op == Op::constant)) {
    const double x = a->value, y = b ? b->value : 0.0;
    switch (op) {
      case Op::add: return make_const(x + y);
      case Op::sub: return make_const(x - y);
      case Op::mul: return make_const(x * y);
      case Op::neg: return make_const(-x);
      case Op::pow: return make_const(std::pow(x, power));
      case Op::sin: return make_const(std::sin(x));
      case Op::cos: return make_const(std::cos(x));
      case Op::exp: return make_const(std::exp(x));
      default: break;
    }
  }
  switch (op) {
    case Op::add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make(Op::neg, b);
      break;
    case Op::mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    case Op::neg:
      if (a->op == Op::neg) return a->a;
      break;
    case Op::pow:
      if (power == 0) return make_const(1.0);
      if (power == 1) return a;
      break;
    default: break;
  }
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->power = power;
  return n;
}

double eval_node(const Expression::Node& n, const Point& p) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return p[static_cast<std::size_t>(n.axis)];
    case Op::add: return eval_node(*n.a, p) + eval_node(*n.b, p);
    case Op::sub: return eval_node(*n.a, p) - eval_node(*n.b, p);
    case Op::mul: return eval_node(*n.a, p) * eval_node(*n.b, p);
    case Op::neg: return -eval_node(*n.a, p);
    case Op::pow: {
      const double x = eval_node(*n.a, p);
      double r = 1.0;
      for (int i = 0; i < n.power; ++i) r *= x;
      return r;
    }
    case Op::sin: return std::sin(eval_node(*n.a, p));
    case Op::cos: return std::cos(eval_node(*n.a, p));
    case Op::exp: return std::exp(eval_node(*n.a, p));
  }
  return 0.0;
}

NodePtr diff(const NodePtr& n, int axis) {
  switch (n->op) {
    case Op::constant: return make_const(0.0);
    case Op::variable: return make_const(n->axis == axis ? 1.0 : 0.0);
    case Op::add: return make(Op::add, diff(n->a, axis), diff(n->b, axis));
    case Op::sub: return make(Op::sub, diff(n->a, axis), diff(n->b, axis));
    case Op::mul:
      return make(Op::add, make(Op::mul, diff(n->a, axis), n->b), make(Op::mul, n->a, diff(n->b, axis)));
    case Op::neg: return make(Op::neg, diff(n->a, axis));
    case Op::pow:
      return make(Op::mul, make(Op::mul, make_const(n->power), make(Op::pow, n->a, nullptr, n->power - 1)),
                  diff(n->a, axis));
    case Op::sin: return make(Op::mul, make(Op::cos, n->a), diff(n->a, axis));
    case Op::cos: return make(Op::neg, make(Op::mul, make(Op::sin, n->a), diff(n->a, axis)));
    case Op::exp: return make(Op::mul, n, diff(n->a, axis));
  }
  return make_const(0.0);
}

int max_axis_node(const Expression::Node& n) {
  if (n.op == Op::variable) return n.axis;
  int m = -1;
  if (n.a) m = std::max(m, max_axis_node(*n.a));
  if (n.b) m = std::max(m, max_axis_node(*n.b));
  return m;
}

std::string str_node(const Expression::Node& n) {
  switch (n.op) {
    case Op::constant: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      return n.value < 0.0 ? "(" + std::string(buf) + ")" : buf;
    }
    case Op::variable: return n.axis == 0 ? "x" : "y";
    case Op::add: return "(" + str_node(*n.a) + " + " + str_node(*n.b) + ")";
    case Op::sub: return "(" + str_node(*n.a) + " - " + str_node(*n.b) + ")";
    case Op::mul: return str_node(*n.a) + "*" + str_node(*n.b);
    case Op::neg: return "(-" + str_node(*n.a) + ")";
    case Op::pow: return "(" + str_node(*n.a) + ")^" + std::to_string(n.power);
    case Op::sin: return "sin(" + str_node(*n.a) + ")";
    case Op::cos: return "cos(" + str_node(*n.a) + ")";
    case Op::exp: return "exp(" + str_node(*n.a) + ")";
  }
  return "";
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected '" + std::string(1, s_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = make(Op::add, lhs, term());
      else if (accept('-'))
        lhs = make(Op::sub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Op::mul, lhs, unary());
      } else if (accept('/')) {
        const std::size_t at = pos_;
        NodePtr rhs = unary();
        if (rhs->op != Op::constant) throw ParseError("division only by constant expressions", at);
        if (rhs->value == 0.0) throw ParseError("division by zero", at);
        lhs = make(Op::mul, lhs, make_const(1.0 / rhs->value));
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) {
      skip();
      const std::size_t at = pos_;
      std::size_t end = pos_;
      while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
      if (end == pos_) throw ParseError("exponent must be a non-negative integer", at);
      const long p = std::strtol(s_.substr(pos_, end - pos_).c_str(), nullptr, 10);
      if (p > 64) throw ParseError("exponent too large", at);
      pos_ = end;
      return make(Op::pow, base, nullptr, static_cast<int>(p));
    }
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const std::size_t at = pos_;
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      const double v = std::strtod(s_.c_str() + pos_, &end);
      const auto len = static_cast<std::size_t>(end - (s_.c_str() + pos_));
      if (len == 0) throw ParseError("malformed number", at);
      pos_ += len;
      return make_const(v);
    }
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < s_.size() && std::isalnum(static_cast<unsigned char>(s_[end]))) ++end;
      const std::string id = s_.substr(pos_, end - pos_);
      pos_ = end;
      if (id == "pi") return make_const(std::numbers::pi);
      if (id == "x" || id == "x1") return make_var(0);
      if (id == "y" || id == "x2") return make_var(1);
      Op op;
      if (id == "sin")
        op = Op::sin;
      else if (id == "cos")
        op = Op::cos;
      else if (id == "exp")
        op = Op::exp;
      else
        throw ParseError("unknown identifier '" + id + "'", at);
      if (!accept('(')) throw ParseError("expected '(' after " + id, pos_);
      NodePtr arg = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return make(op, arg);
    }
    throw ParseError("unexpected '" + std::string(1, c) + "'", at);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : node_(make_const(0.0)) {}

Expression Expression::constant(double v) { return Expression(make_const(v)); }

Expression Expression::variable(int axis) {
  if (axis < 0 || axis > 1) throw std::invalid_argument("expression: axis must be 0 or 1");
  return Expression(make_var(axis));
}

Expression Expression::parse(const std::string& text) { return Expression(Parser(text).parse()); }

double Expression::eval(const Point& p) const { return eval_node(*node_, p); }

Expression Expression::derivative(int axis) const { return Expression(diff(node_, axis)); }

bool Expression::is_constant() const { return max_axis_node(*node_) < 0; }

int Expression::max_axis() const { return max_axis_node(*node_); }

std::string Expression::str() const { return str_node(*node_); }

Expression operator+(const Expression& a, const Expression& b) {
  return Expression(make(Op::add, a.node_, b.node_));
}
Expression operator-(const Expression& a, const Expression& b) {
  return Expression(make(Op::sub, a.node_, b.node_));
}
Expression operator*(const Expression& a, const Expression& b) {
  return Expression(make(Op::mul, a.node_, b.node_));
}
Expression operator-(const Expression& a) { return Expression(make(Op::neg, a.node_)); }

}  // namespace spme
