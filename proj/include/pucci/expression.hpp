#pragma once

// Closed-form expressions for right-hand sides and exterior data.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'x1' | 'x2' | 'x' | 'r' | 'pi'
//            | '|' expr '|' | '(' expr ')'
//            | 'ball(' expr (',' expr)* ')'
//
// `x` is x1, `r` is |x|. ball(c1, ..., cd, rad) is the indicator of the open
// ball of radius rad about c; its arguments must be constants.

#include "pucci/grid.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pucci {

class Expression {
 public:
  /// Throws Configuration with the offending position on a syntax error or
  /// when a coordinate beyond `dim` is used.
  static Expression parse(const std::string& text, int dim);

  template <int Dim>
  double operator()(const Point<Dim>& x) const;

  const std::string& text() const { return text_; }
  /// Radii about the origin across which the expression may be non-smooth
  /// (radii of origin-centred balls).
  const std::vector<double>& kinks() const { return kinks_; }
  /// Interval enclosing the values on the box [lo, hi].
  template <int Dim>
  std::pair<double, double> range(const Point<Dim>& lo, const Point<Dim>& hi) const;

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  std::vector<double> kinks_;
};

/// Field that equals `e` inside B_{far_radius} and `far_value` outside. The
/// sup bound comes from interval evaluation over a 16^d cover of the ball's
/// bounding box, so it is an upper bound (possibly loose).
template <int Dim>
FieldFunction<Dim> expression_field(const Expression& e, double far_radius, double far_value);

}  // namespace pucci
