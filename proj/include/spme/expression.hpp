// Closed-form scalar expressions in the spatial coordinates, with exact
// symbolic derivatives.
//
// Grammar (whitespace ignored):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*        division only by constants
//   unary   := '-' unary | power
//   power   := primary ('^' unsigned-integer)?
//   primary := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//   var     := 'x' | 'y' | 'x1' | 'x2'
//   func    := 'sin' | 'cos' | 'exp'
#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>

#include "spme/geometry.hpp"

namespace spme {

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& msg, std::size_t position)
      : std::invalid_argument(msg + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class Expression {
 public:
  struct Node;

  /// The constant 0.
  Expression();
  static Expression constant(double v);
  /// Coordinate x_{axis+1}.
  static Expression variable(int axis);
  static Expression parse(const std::string& text);

  double eval(const Point& p) const;
  Expression derivative(int axis) const;
  bool is_constant() const;
  /// Highest coordinate axis referenced, or -1.
  int max_axis() const;
  std::string str() const;

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);

 private:
  explicit Expression(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace spme
