#include "pucci/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace pucci {

enum class Op { Number, Coord, Norm, Add, Sub, Mul, Div, Pow, Neg, Abs, Ball };

struct Expression::Node {
  Op op = Op::Number;
  double number = 0.0;
  int coord = 0;
  std::vector<std::shared_ptr<const Node>> args;
  std::vector<double> ball;  // centre coordinates then radius
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Interval = std::pair<double, double>;

NodePtr make(Op op, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->args = std::move(args);
  return n;
}

NodePtr number(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->number = v;
  return n;
}

bool constant_node(const Expression::Node& n) {
  if (n.op == Op::Coord || n.op == Op::Norm || n.op == Op::Ball) return false;
  return std::all_of(n.args.begin(), n.args.end(), [](const NodePtr& a) { return constant_node(*a); });
}

double eval_constant(const Expression::Node& n);

class Parser {
 public:
  Parser(const std::string& text, int dim) : s_(text), dim_(dim) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

  std::vector<double> kinks;

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::Configuration, "expression \"" + s_ + "\" at position " + std::to_string(pos_) + ": " + what);
  }

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

  void expect(char c) {
    if (!accept(c)) error(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr left = term();
    for (;;) {
      if (accept('+')) left = make(Op::Add, {left, term()});
      else if (accept('-')) left = make(Op::Sub, {left, term()});
      else return left;
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      if (accept('*')) left = make(Op::Mul, {left, unary()});
      else if (accept('/')) left = make(Op::Div, {left, unary()});
      else return left;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) {
      NodePtr e = unary();
      if (!constant_node(*e)) error("exponent must be constant");
      return make(Op::Pow, {base, e});
    }
    return base;
  }

  std::string identifier() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) error("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) error("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return number(v);
    }
    if (accept('(')) {
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (accept('|')) {
      NodePtr e = expr();
      expect('|');
      return make(Op::Abs, {e});
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t at = pos_;
      std::string id = identifier();
      if (id == "x" || id == "x1" || id == "x2") {
        int k = id == "x2" ? 1 : 0;
        if (k >= dim_) {
          pos_ = at;
          error("coordinate " + id + " used in dimension " + std::to_string(dim_));
        }
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Coord;
        n->coord = k;
        return n;
      }
      if (id == "r") return make(Op::Norm);
      if (id == "pi") return number(kPi);
      if (id == "ball") return ball();
      pos_ = at;
      error("unknown identifier '" + id + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr ball() {
    expect('(');
    std::vector<double> a;
    do {
      NodePtr e = expr();
      if (!constant_node(*e)) error("ball arguments must be constant");
      a.push_back(eval_constant(*e));
    } while (accept(','));
    expect(')');
    if (static_cast<int>(a.size()) != dim_ + 1) {
      error("ball expects " + std::to_string(dim_ + 1) + " arguments in dimension " + std::to_string(dim_));
    }
    if (!(a.back() > 0.0)) error("ball radius must be positive");
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Ball;
    n->ball = a;
    bool centred = std::all_of(a.begin(), a.end() - 1, [](double v) { return v == 0.0; });
    if (centred) kinks.push_back(a.back());
    return n;
  }

  const std::string& s_;
  int dim_;
  std::size_t pos_ = 0;
};

double power_value(double b, double e) {
  double n = std::round(e);
  if (n == e && std::abs(n) < 1e6) return std::pow(b, static_cast<int>(n));
  return std::pow(b, e);
}

template <int Dim>
double eval(const Expression::Node& n, const Point<Dim>& x) {
  switch (n.op) {
    case Op::Number: return n.number;
    case Op::Coord: return x[n.coord];
    case Op::Norm: return x.norm();
    case Op::Add: return eval(*n.args[0], x) + eval(*n.args[1], x);
    case Op::Sub: return eval(*n.args[0], x) - eval(*n.args[1], x);
    case Op::Mul: return eval(*n.args[0], x) * eval(*n.args[1], x);
    case Op::Div: return eval(*n.args[0], x) / eval(*n.args[1], x);
    case Op::Pow: return power_value(eval(*n.args[0], x), eval(*n.args[1], x));
    case Op::Neg: return -eval(*n.args[0], x);
    case Op::Abs: return std::abs(eval(*n.args[0], x));
    case Op::Ball: {
      double d2 = 0.0;
      for (int k = 0; k < Dim; ++k) d2 += (x[k] - n.ball[k]) * (x[k] - n.ball[k]);
      return d2 < n.ball[Dim] * n.ball[Dim] ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

double eval_constant(const Expression::Node& n) { return eval<1>(n, Point<1>::Zero()); }

const Interval kWhole{-kInf, kInf};

Interval hull(std::initializer_list<double> v) {
  double lo = kInf, hi = -kInf;
  for (double a : v) {
    if (std::isnan(a)) return kWhole;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  return {lo, hi};
}

Interval power_range(Interval b, double e) {
  double n = std::round(e);
  if (n == e && n >= 0.0) {
    int k = static_cast<int>(n);
    if (k == 0) return {1.0, 1.0};
    if (k % 2 == 1 || b.first >= 0.0) return hull({power_value(b.first, e), power_value(b.second, e)});
    if (b.second <= 0.0) return hull({power_value(b.first, e), power_value(b.second, e)});
    return {0.0, std::max(power_value(b.first, e), power_value(b.second, e))};
  }
  if (b.first < 0.0 || (e < 0.0 && b.first <= 0.0)) return kWhole;
  return hull({std::pow(b.first, e), std::pow(b.second, e)});
}

template <int Dim>
Interval range(const Expression::Node& n, const Point<Dim>& lo, const Point<Dim>& hi) {
  switch (n.op) {
    case Op::Number: return {n.number, n.number};
    case Op::Coord: return {lo[n.coord], hi[n.coord]};
    case Op::Norm: {
      Point<Dim> near = Point<Dim>::Zero(), far;
      for (int k = 0; k < Dim; ++k) {
        if (lo[k] > 0.0) near[k] = lo[k];
        else if (hi[k] < 0.0) near[k] = hi[k];
        far[k] = std::max(std::abs(lo[k]), std::abs(hi[k]));
      }
      return {near.norm(), far.norm()};
    }
    case Op::Add: {
      Interval a = range(*n.args[0], lo, hi), b = range(*n.args[1], lo, hi);
      return {a.first + b.first, a.second + b.second};
    }
    case Op::Sub: {
      Interval a = range(*n.args[0], lo, hi), b = range(*n.args[1], lo, hi);
      return {a.first - b.second, a.second - b.first};
    }
    case Op::Mul: {
      Interval a = range(*n.args[0], lo, hi), b = range(*n.args[1], lo, hi);
      return hull({a.first * b.first, a.first * b.second, a.second * b.first, a.second * b.second});
    }
    case Op::Div: {
      Interval a = range(*n.args[0], lo, hi), b = range(*n.args[1], lo, hi);
      if (b.first <= 0.0 && b.second >= 0.0) return kWhole;
      return hull({a.first / b.first, a.first / b.second, a.second / b.first, a.second / b.second});
    }
    case Op::Pow: return power_range(range(*n.args[0], lo, hi), eval_constant(*n.args[1]));
    case Op::Neg: {
      Interval a = range(*n.args[0], lo, hi);
      return {-a.second, -a.first};
    }
    case Op::Abs: {
      Interval a = range(*n.args[0], lo, hi);
      if (a.first >= 0.0) return a;
      if (a.second <= 0.0) return {-a.second, -a.first};
      return {0.0, std::max(-a.first, a.second)};
    }
    case Op::Ball: {
      double near2 = 0.0, far2 = 0.0;
      for (int k = 0; k < Dim; ++k) {
        double c = n.ball[k];
        double dn = c < lo[k] ? lo[k] - c : (c > hi[k] ? c - hi[k] : 0.0);
        double df = std::max(std::abs(lo[k] - c), std::abs(hi[k] - c));
        near2 += dn * dn;
        far2 += df * df;
      }
      double r2 = n.ball[Dim] * n.ball[Dim];
      if (far2 < r2) return {1.0, 1.0};
      if (near2 >= r2) return {0.0, 0.0};
      return {0.0, 1.0};
    }
  }
  return kWhole;
}

}  // namespace

Expression Expression::parse(const std::string& text, int dim) {
  if (dim != 1 && dim != 2) fail(ErrorKind::Dimension, "expressions support d = 1 or 2");
  Parser p(text, dim);
  Expression e;
  e.text_ = text;
  e.root_ = p.parse();
  e.kinks_ = std::move(p.kinks);
  std::sort(e.kinks_.begin(), e.kinks_.end());
  e.kinks_.erase(std::unique(e.kinks_.begin(), e.kinks_.end()), e.kinks_.end());
  return e;
}

template <int Dim>
double Expression::operator()(const Point<Dim>& x) const {
  return eval(*root_, x);
}

template <int Dim>
std::pair<double, double> Expression::range(const Point<Dim>& lo, const Point<Dim>& hi) const {
  return pucci::range(*root_, lo, hi);
}

template <int Dim>
FieldFunction<Dim> expression_field(const Expression& e, double far_radius, double far_value) {
  if (!(far_radius > 0.0) || !std::isfinite(far_radius)) {
    fail(ErrorKind::Configuration, "exterior expression needs a finite positive far_radius");
  }
  constexpr int kSplit = 16;
  double step = 2.0 * far_radius / kSplit;
  double bound = std::abs(far_value);
  Index<Dim> m = Index<Dim>::Zero();
  for (;;) {
    Point<Dim> lo = (m.template cast<double>().array() * step - far_radius).matrix();
    Point<Dim> hi = (lo.array() + step).matrix();
    auto [a, b] = e.range<Dim>(lo, hi);
    bound = std::max({bound, std::abs(a), std::abs(b)});
    int k = 0;
    while (k < Dim && ++m[k] == kSplit) m[k++] = 0;
    if (k == Dim) break;
  }
  if (!std::isfinite(bound)) fail(ErrorKind::UnboundedFunction, "expression \"" + e.text() + "\" has no finite bound on its ball");

  FieldFunction<Dim> f;
  f.value = [e](const Point<Dim>& x) { return e(x); };
  f.far_radius = far_radius;
  f.far_value = far_value;
  f.kinks = e.kinks();
  f.kinks.push_back(far_radius);
  std::sort(f.kinks.begin(), f.kinks.end());
  f.kinks.erase(std::unique(f.kinks.begin(), f.kinks.end()), f.kinks.end());
  f.sup_bound = bound;
  f.label = e.text();
  return f;
}

template double Expression::operator()(const Point<1>&) const;
template double Expression::operator()(const Point<2>&) const;
template std::pair<double, double> Expression::range(const Point<1>&, const Point<1>&) const;
template std::pair<double, double> Expression::range(const Point<2>&, const Point<2>&) const;
template FieldFunction<1> expression_field(const Expression&, double, double);
template FieldFunction<2> expression_field(const Expression&, double, double);

}  // namespace pucci
