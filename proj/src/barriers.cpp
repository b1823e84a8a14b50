#include "pucci/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pucci {

double BarrierParams::outer() const { return 2.0 * std::sqrt(static_cast<double>(n)); }

void BarrierParams::validate() const {
  if (n != 1 && n != 2) fail(ErrorKind::Dimension, "barrier dimension must be 1 or 2");
  if (!(r > 0.0 && r <= 1.0)) fail(ErrorKind::Precondition, "barrier radius r must lie in (0, 1]");
  if (!(p > n)) fail(ErrorKind::Precondition, "barrier exponent p must exceed the dimension");
  if (!(delta > 0.0 && delta < r / 16.0)) fail(ErrorKind::Precondition, "barrier cap radius must satisfy 0 < delta < r/16");
  if (!(alpha_range[0] > 0.0 && alpha_range[0] <= alpha_range[1] && alpha_range[1] < 2.0))
    fail(ErrorKind::Precondition, "alpha range must satisfy 0 < alpha0 <= alpha1 < 2");
}

double barrier_profile(double p, double delta, double outer, double rho) {
  return std::min(std::pow(delta, -p), std::max(std::pow(rho, -p), std::pow(outer, -p)));
}

double barrier_eval(const BarrierParams& params, double norm_x) {
  return barrier_profile(params.p, params.delta, params.outer(), norm_x);
}

namespace {

void check_basic(const BarrierParams& params, int dim) {
  if (params.n != dim) fail(ErrorKind::Dimension, "barrier dimension does not match the evaluation dimension");
  if (!(params.p > 0.0) || !(params.delta > 0.0) || !(params.r > 0.0 && params.r <= 1.0))
    fail(ErrorKind::Precondition, "barrier needs p > 0, delta > 0 and r in (0, 1]");
  if (params.p * std::log(std::max(1.0, 1.0 / params.delta)) > 600.0)
    fail(ErrorKind::Precondition, "delta^-p overflows double precision");
}

template <int Dim>
Point<Dim> direction(double angle) {
  Point<Dim> e;
  if constexpr (Dim == 1) {
    e[0] = angle == 0.0 ? 1.0 : -1.0;
  } else {
    e << std::cos(angle), std::sin(angle);
  }
  return e;
}

template <int Dim>
BarrierCertificate certify(const FieldFunction<Dim>& field, const KernelSpec& spec, const OperatorKind<Dim>& kind,
                           const std::vector<Point<Dim>>& pts, double h) {
  BarrierCertificate c;
  c.alpha = spec.alpha;
  c.resolution = h;
  c.grid_min = kInf;
  c.pass = true;
  for (const auto& x : pts) {
    const OperatorEvaluation e = eval_operator_field(kind, spec, field, x, h, 1e-8);
    c.points.emplace_back(x.data(), x.data() + Dim);
    c.values.push_back(e.value);
    c.budgets.push_back(e.error_budget());
    c.tolerance = std::max(c.tolerance, e.error_budget());
    c.grid_min = std::min(c.grid_min, e.value);
    if (!(e.value >= -e.error_budget())) c.pass = false;
  }
  if (pts.empty()) c.grid_min = 0.0;
  return c;
}

}  // namespace

template <int Dim>
FieldFunction<Dim> barrier_field(const BarrierParams& params) {
  check_basic(params, Dim);
  FieldFunction<Dim> f;
  const double p = params.p;
  const double delta = params.delta;
  const double outer = params.outer();
  f.value = [p, delta, outer](const Point<Dim>& x) { return barrier_profile(p, delta, outer, x.norm()); };
  f.far_radius = outer;
  f.far_value = std::pow(outer, -p);
  f.kinks = {delta, outer};
  f.sup_bound = std::max(std::pow(delta, -p), f.far_value);
  f.label = "barrier";
  return f;
}

template <int Dim>
std::vector<Point<Dim>> annulus_points(double inner, double outer, double h) {
  if (!(h > 0.0) || !(outer > inner) || !(inner >= 0.0)) fail(ErrorKind::Configuration, "invalid annulus");
  std::vector<double> radii;
  double rho = inner + h;
  double step = h;
  while (rho < outer) {
    radii.push_back(rho);
    step *= 1.25;
    rho += step;
  }
  radii.push_back(outer);
  std::vector<double> angles;
  if constexpr (Dim == 1) {
    angles = {0.0, kPi};
  } else {
    angles = {0.0, kPi / 6.0, kPi / 4.0};
  }
  std::vector<Point<Dim>> pts;
  for (double r : radii)
    for (double a : angles) pts.push_back(r * direction<Dim>(a));
  return pts;
}

template <int Dim>
BarrierCertificate verify_barrier(const BarrierParams& params, const KernelSpec& spec, double h) {
  check_basic(params, Dim);
  spec.validate();
  if (!(h > 0.0) || h > params.delta / 8.0 * (1.0 + 1e-12))
    fail(ErrorKind::Resolution, "near-field resolution must satisfy h <= delta/8");
  const FieldFunction<Dim> f = barrier_field<Dim>(params);
  BarrierCertificate c;
  if (params.r < params.outer()) {
    c = certify(f, spec, OperatorKind<Dim>::mminus(0), annulus_points<Dim>(params.r, params.outer(), h), h);
  } else {
    c.pass = true;
    c.alpha = spec.alpha;
    c.resolution = h;
  }
  c.params = params;
  return c;
}

template <int Dim>
BarrierParams search_barrier_params(double r, const KernelSpec& spec, std::array<double, 2> alpha_range,
                                    const SearchOptions& options) {
  if (!(r > 0.0 && r <= 1.0)) fail(ErrorKind::Precondition, "barrier radius r must lie in (0, 1]");
  spec.validate();
  const int n = Dim;
  std::vector<double> ps = {n + 1.0, n + 2.0};
  for (int k = 1; static_cast<int>(ps.size()) < options.max_p_steps; ++k) ps.push_back(std::ldexp(n + 1.0, k));
  std::vector<double> alphas = {alpha_range[0], 0.5 * (alpha_range[0] + alpha_range[1]), alpha_range[1]};
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  double best_margin = -kInf;
  BarrierParams best;
  for (double p : ps) {
    double delta = r / 32.0;
    for (int k = 0; k < options.max_delta_steps; ++k, delta *= 0.5) {
      if (p * std::log(1.0 / delta) > 600.0) break;
      BarrierParams params{p, delta, r, n, alpha_range};
      params.validate();
      bool ok = true;
      double margin = kInf;
      for (double a : alphas) {
        const auto c = verify_barrier<Dim>(params, spec.with_alpha(a), delta / options.resolution_ratio);
        margin = std::min(margin, c.grid_min + c.tolerance);
        if (!c.pass) {
          ok = false;
          break;
        }
      }
      if (ok) return params;
      if (margin > best_margin) {
        best_margin = margin;
        best = params;
      }
    }
  }
  std::ostringstream msg;
  msg << "no admissible (p, delta) on the search lattice; best margin " << best_margin << " at p = " << best.p
      << ", delta = " << best.delta;
  fail(ErrorKind::SearchFailure, msg.str());
}

double cp_constant(double p) {
  if (!(p > 0.0)) fail(ErrorKind::Domain, "C_p needs p > 0");
  return p * (1.0 + 0.5 * (p + 2.0) * (p + 4.0));
}

template <int Dim>
BumpResult<Dim> build_bump(const BarrierParams& params, const KernelSpec& spec, const std::vector<int>& scales, int grid_cells) {
  check_basic(params, Dim);
  spec.validate();
  if (params.r > 0.25) fail(ErrorKind::Precondition, "bump construction needs barrier params certified for r <= 1/4");
  const double p = params.p;
  const double delta = params.delta;
  const double outer = params.outer();
  const double floor_value = std::pow(outer, -p);
  const double cap0 = std::pow(delta, -p) * (1.0 + 0.5 * p);
  const double cap2 = 0.5 * p * std::pow(delta, -p - 2.0);
  const auto capped = [=](double rho) {
    if (rho <= delta) return cap0 - cap2 * rho * rho;
    return std::max(std::pow(rho, -p), floor_value);
  };
  // Φ > 2 on Q₃ is decided at the corner of the cube, the farthest point.
  const double corner = 1.5 * std::sqrt(static_cast<double>(Dim));
  double a = 2.0 / (capped(corner) - floor_value) * 1.05;
  double q3_min = 0.0;
  const int q3_samples = Dim == 1 ? 601 : 61;
  bool built = false;
  for (int attempt = 0; attempt < 6 && !built; ++attempt, a *= 1.5) {
    q3_min = kInf;
    for (int k = 0; k < (Dim == 1 ? q3_samples : q3_samples * q3_samples); ++k) {
      Point<Dim> z;
      for (int d = 0; d < Dim; ++d) {
        const int idx = d == 0 ? k % q3_samples : k / q3_samples;
        z[d] = -1.5 + 3.0 * idx / (q3_samples - 1);
      }
      q3_min = std::min(q3_min, a * (capped(z.norm()) - floor_value));
    }
    built = q3_min > 2.0;
  }
  if (!built) fail(ErrorKind::Construction, "bump does not exceed 2 on the cube of side 3");
  a /= 1.5;

  FieldFunction<Dim> field;
  field.value = [capped, a, floor_value](const Point<Dim>& x) { return a * (capped(x.norm()) - floor_value); };
  field.far_radius = outer;
  field.far_value = 0.0;
  field.kinks = {delta, outer};
  field.sup_bound = a * (cap0 - floor_value);
  field.label = "bump";

  const double box = std::ceil(outer);
  const auto geometry = GridGeometry<Dim>{box, grid_cells};
  GridFunction<Dim> grid = GridFunction<Dim>::sample(geometry, field);

  const double h = delta / 16.0;
  const auto pts = annulus_points<Dim>(0.25, outer + 0.5, h);
  BumpResult<Dim> out{grid, field, a, q3_min, scales, {}, true};
  for (int i : scales) {
    BarrierCertificate c = certify(field, spec, OperatorKind<Dim>::mminus(i), pts, h);
    c.params = params;
    out.pass = out.pass && c.pass;
    out.certificates.push_back(std::move(c));
  }
  return out;
}

template FieldFunction<1> barrier_field(const BarrierParams&);
template FieldFunction<2> barrier_field(const BarrierParams&);
template std::vector<Point<1>> annulus_points(double, double, double);
template std::vector<Point<2>> annulus_points(double, double, double);
template BarrierCertificate verify_barrier<1>(const BarrierParams&, const KernelSpec&, double);
template BarrierCertificate verify_barrier<2>(const BarrierParams&, const KernelSpec&, double);
template BarrierParams search_barrier_params<1>(double, const KernelSpec&, std::array<double, 2>, const SearchOptions&);
template BarrierParams search_barrier_params<2>(double, const KernelSpec&, std::array<double, 2>, const SearchOptions&);
template struct BumpResult<1>;
template struct BumpResult<2>;
template BumpResult<1> build_bump(const BarrierParams&, const KernelSpec&, const std::vector<int>&, int);
template BumpResult<2> build_bump(const BarrierParams&, const KernelSpec&, const std::vector<int>&, int);

}  // namespace pucci
