#include "pucci/grid.hpp"

#include <cmath>
#include <sstream>

namespace pucci {

template <int Dim>
GridGeometry<Dim> GridGeometry<Dim>::from_spacing(double radius, double spacing) {
  if (!(radius > 0.0) || !(spacing > 0.0)) fail(ErrorKind::Configuration, "grid radius and spacing must be positive");
  const double n = 2.0 * radius / spacing;
  const double rounded = std::round(n);
  if (rounded < 2.0 || std::abs(n - rounded) > 1e-9 * rounded)
    fail(ErrorKind::Configuration, "grid spacing must divide 2R into an integer number of cells");
  return {radius, static_cast<int>(rounded)};
}

template <int Dim>
GridFunction<Dim>::GridFunction(GridGeometry<Dim> geometry, Eigen::VectorXd values, Exterior<Dim> exterior, double sup_bound)
    : geometry_(geometry), values_(std::move(values)), exterior_(std::move(exterior)), sup_bound_(sup_bound) {
  if (values_.size() != geometry_.size()) fail(ErrorKind::Dimension, "grid values do not match the geometry");
  if (!std::isfinite(sup_bound_)) {
    const double grid_sup = values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0;
    sup_bound_ = std::max(grid_sup, exterior_.sup_bound());
  }
  validate();
}

template <int Dim>
GridFunction<Dim> GridFunction<Dim>::sample(const GridGeometry<Dim>& geometry, const FieldFunction<Dim>& f) {
  Eigen::VectorXd values(geometry.size());
  for (Eigen::Index k = 0; k < values.size(); ++k) values[k] = f(geometry.coord(geometry.multi(k)));
  return GridFunction(geometry, std::move(values), Exterior<Dim>::from_formula(f), kInf);
}

template <int Dim>
GridFunction<Dim> GridFunction<Dim>::constant(const GridGeometry<Dim>& geometry, double c) {
  return GridFunction(geometry, Eigen::VectorXd::Constant(geometry.size(), c), Exterior<Dim>::constant_value(c), std::abs(c));
}

template <int Dim>
double GridFunction<Dim>::at(const Point<Dim>& z) const {
  const double h = geometry_.spacing();
  Point<Dim> s = (z.array() + geometry_.radius).matrix() / h;
  for (int d = 0; d < Dim; ++d) {
    if (s[d] < -1e-12 || s[d] > geometry_.cells + 1e-12) return exterior_.at(z);
  }
  Index<Dim> base;
  Point<Dim> frac;
  for (int d = 0; d < Dim; ++d) {
    const double c = std::clamp(s[d], 0.0, static_cast<double>(geometry_.cells));
    base[d] = std::min(static_cast<int>(std::floor(c)), geometry_.cells - 1);
    frac[d] = c - base[d];
  }
  double out = 0.0;
  for (int corner = 0; corner < (1 << Dim); ++corner) {
    double w = 1.0;
    Index<Dim> m = base;
    for (int d = 0; d < Dim; ++d) {
      const bool up = (corner >> d) & 1;
      m[d] += up ? 1 : 0;
      w *= up ? frac[d] : 1.0 - frac[d];
    }
    if (w != 0.0) out += w * values_[geometry_.flat(m)];
  }
  return out;
}

template <int Dim>
void GridFunction<Dim>::validate() const {
  if (!values_.allFinite()) fail(ErrorKind::InvalidFunction, "grid values must be finite");
  const double grid_sup = values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0;
  if (grid_sup > sup_bound_ * (1.0 + 1e-12) + 1e-300) fail(ErrorKind::InvalidFunction, "grid values exceed sup_bound");
  if (exterior_.sup_bound() > sup_bound_ * (1.0 + 1e-12) + 1e-300)
    fail(ErrorKind::InvalidFunction, "exterior descriptor exceeds sup_bound");
}

template <int Dim>
GridFunction<Dim> GridFunction<Dim>::combine(double a, const GridFunction& u, double b, const GridFunction& v) {
  if (!(u.geometry_ == v.geometry_)) fail(ErrorKind::Dimension, "combine needs a shared geometry");
  Eigen::VectorXd values = a * u.values_ + b * v.values_;
  const auto& eu = u.exterior_;
  const auto& ev = v.exterior_;
  Exterior<Dim> ext;
  if (eu.kind != ExteriorKind::Formula && ev.kind != ExteriorKind::Formula) {
    const double c = a * eu.far_value() + b * ev.far_value();
    ext = c == 0.0 ? Exterior<Dim>::zero() : Exterior<Dim>::constant_value(c);
  } else {
    FieldFunction<Dim> f;
    f.value = [a, b, eu, ev](const Point<Dim>& z) { return a * eu.at(z) + b * ev.at(z); };
    f.far_radius = std::max(eu.far_radius(), ev.far_radius());
    f.far_value = a * eu.far_value() + b * ev.far_value();
    f.kinks = eu.formula.kinks;
    f.kinks.insert(f.kinks.end(), ev.formula.kinks.begin(), ev.formula.kinks.end());
    f.sup_bound = std::abs(a) * eu.sup_bound() + std::abs(b) * ev.sup_bound();
    ext = Exterior<Dim>::from_formula(std::move(f));
  }
  return GridFunction(u.geometry_, std::move(values), std::move(ext),
                      std::abs(a) * u.sup_bound_ + std::abs(b) * v.sup_bound_);
}

template <int Dim>
GridFunction<Dim> GridFunction<Dim>::scaled(double c) const {
  return combine(c, *this, 0.0, *this);
}

template <int Dim>
std::string to_csv(const GridFunction<Dim>& u) {
  std::ostringstream out;
  out.precision(17);
  out << "index";
  for (int d = 0; d < Dim; ++d) out << ",x" << d + 1;
  out << ",value\n";
  const auto& g = u.geometry();
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const Point<Dim> z = g.coord(g.multi(k));
    out << k;
    for (int d = 0; d < Dim; ++d) out << ',' << z[d];
    out << ',' << u.values()[k] << '\n';
  }
  return out.str();
}

template struct GridGeometry<1>;
template struct GridGeometry<2>;
template class GridFunction<1>;
template class GridFunction<2>;
template std::string to_csv(const GridFunction<1>&);
template std::string to_csv(const GridFunction<2>&);

}  // namespace pucci
