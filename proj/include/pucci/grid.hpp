#pragma once

// Uniform grids on [-R, R]^Dim and bounded functions on R^Dim represented by
// grid values plus an exterior descriptor.

#include "pucci/core.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace pucci {

template <int Dim>
struct GridGeometry {
  double radius = 1.0;
  int cells = 2;  // cells per axis; nodes per axis = cells + 1

  /// Throws Configuration unless 2R/h is an integer (to 1e-9 relative).
  static GridGeometry from_spacing(double radius, double spacing);

  double spacing() const { return 2.0 * radius / cells; }
  int nodes_per_axis() const { return cells + 1; }
  Eigen::Index size() const {
    Eigen::Index n = 1;
    for (int k = 0; k < Dim; ++k) n *= nodes_per_axis();
    return n;
  }
  bool contains(const Index<Dim>& m) const { return (m.array() >= 0).all() && (m.array() <= cells).all(); }
  /// Interior nodes are those off the box boundary.
  bool interior(const Index<Dim>& m) const { return (m.array() > 0).all() && (m.array() < cells).all(); }
  Eigen::Index flat(const Index<Dim>& m) const {
    Eigen::Index k = 0;
    for (int d = Dim - 1; d >= 0; --d) k = k * nodes_per_axis() + m[d];
    return k;
  }
  Index<Dim> multi(Eigen::Index k) const {
    Index<Dim> m;
    for (int d = 0; d < Dim; ++d) {
      m[d] = static_cast<int>(k % nodes_per_axis());
      k /= nodes_per_axis();
    }
    return m;
  }
  Point<Dim> coord(const Index<Dim>& m) const { return (m.template cast<double>().array() * spacing() - radius).matrix(); }
  /// Nearest node to z (not clamped to the box).
  Index<Dim> nearest(const Point<Dim>& z) const {
    Index<Dim> m;
    for (int d = 0; d < Dim; ++d) m[d] = static_cast<int>(std::lround((z[d] + radius) / spacing()));
    return m;
  }
  /// The node index of the origin (requires an even number of cells).
  Index<Dim> center() const { return Index<Dim>::Constant(cells / 2); }
  bool operator==(const GridGeometry& o) const { return radius == o.radius && cells == o.cells; }
};

/// A closed-form function on R^Dim used for exteriors and for grid-free
/// operator evaluation. Outside the Euclidean ball of radius `far_radius` it
/// equals `far_value`. `kinks` lists radii (about the origin) across which the
/// profile is not smooth; quadrature uses them as breakpoints.
template <int Dim>
struct FieldFunction {
  std::function<double(const Point<Dim>&)> value;
  double far_radius = kInf;
  double far_value = 0.0;
  std::vector<double> kinks;
  double sup_bound = kInf;
  std::string label;

  double operator()(const Point<Dim>& z) const {
    if (z.norm() > far_radius) return far_value;
    return value(z);
  }
};

enum class ExteriorKind { Zero, Constant, Formula };

template <int Dim>
struct Exterior {
  ExteriorKind kind = ExteriorKind::Zero;
  double constant = 0.0;
  FieldFunction<Dim> formula;

  static Exterior zero() { return {}; }
  static Exterior constant_value(double c) { return {ExteriorKind::Constant, c, {}}; }
  static Exterior from_formula(FieldFunction<Dim> f) { return {ExteriorKind::Formula, 0.0, std::move(f)}; }

  double at(const Point<Dim>& z) const {
    switch (kind) {
      case ExteriorKind::Zero: return 0.0;
      case ExteriorKind::Constant: return constant;
      case ExteriorKind::Formula: return formula(z);
    }
    return 0.0;
  }
  /// Radius beyond which the exterior is the constant `far_value()`.
  double far_radius() const { return kind == ExteriorKind::Formula ? formula.far_radius : 0.0; }
  double far_value() const {
    switch (kind) {
      case ExteriorKind::Zero: return 0.0;
      case ExteriorKind::Constant: return constant;
      case ExteriorKind::Formula: return formula.far_value;
    }
    return 0.0;
  }
  double sup_bound() const {
    switch (kind) {
      case ExteriorKind::Zero: return 0.0;
      case ExteriorKind::Constant: return std::abs(constant);
      case ExteriorKind::Formula: return formula.sup_bound;
    }
    return kInf;
  }
};

/// Bounded function on R^Dim: node values on [-R, R]^Dim plus an exterior.
template <int Dim>
class GridFunction {
 public:
  GridFunction(GridGeometry<Dim> geometry, Eigen::VectorXd values, Exterior<Dim> exterior, double sup_bound = kInf);

  /// Samples `f` on the grid and uses it as the exterior too.
  static GridFunction sample(const GridGeometry<Dim>& geometry, const FieldFunction<Dim>& f);
  static GridFunction constant(const GridGeometry<Dim>& geometry, double c);

  const GridGeometry<Dim>& geometry() const { return geometry_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  const Exterior<Dim>& exterior() const { return exterior_; }
  double sup_bound() const { return sup_bound_; }

  /// Value at a lattice node, possibly outside the box (resolved by the exterior).
  double at(const Index<Dim>& m) const {
    if (geometry_.contains(m)) return values_[geometry_.flat(m)];
    return exterior_.at(geometry_.coord(m));
  }
  /// Value at an arbitrary point: multilinear interpolation inside the box.
  double at(const Point<Dim>& z) const;

  /// Recomputes sup_bound as max(|values|, exterior bound) and checks the invariants.
  void validate() const;

  /// a·u + b·v on a shared geometry (exteriors combine accordingly).
  static GridFunction combine(double a, const GridFunction& u, double b, const GridFunction& v);
  GridFunction scaled(double c) const;

 private:
  GridGeometry<Dim> geometry_;
  Eigen::VectorXd values_;
  Exterior<Dim> exterior_;
  double sup_bound_;
};

/// δ(u, x, y) = u(x+y) + u(x-y) - 2u(x) at node x and lattice offset y.
template <int Dim>
double second_difference(const GridFunction<Dim>& u, const Index<Dim>& x, const Index<Dim>& y) {
  return u.at(Index<Dim>(x + y)) + u.at(Index<Dim>(x - y)) - 2.0 * u.at(x);
}

/// CSV dump (index, coordinates, value) for debugging.
template <int Dim>
std::string to_csv(const GridFunction<Dim>& u);

}  // namespace pucci
