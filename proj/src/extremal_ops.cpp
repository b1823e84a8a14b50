#include "pucci/extremal_ops.hpp"

#include "pucci/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace pucci {

template <int Dim>
std::string OperatorKind<Dim>::name() const {
  switch (variant) {
    case OperatorVariant::Plus: return "M+";
    case OperatorVariant::Minus: return "M-";
    case OperatorVariant::ScaledPlus: return "M" + std::to_string(scale) + "+";
    case OperatorVariant::ScaledMinus: return "M" + std::to_string(scale) + "-";
    case OperatorVariant::TildePlus: return "tilde M+";
    case OperatorVariant::TildeMinus: return "tilde M-";
    case OperatorVariant::Linear: return "L";
  }
  return "?";
}

template <int Dim>
SignRule<Dim> sign_rule(const OperatorKind<Dim>& kind, const KernelSpec& spec) {
  const double lam = spec.lambda;
  const double Lam = spec.Lambda;
  switch (kind.variant) {
    case OperatorVariant::Plus: return SignRule<Dim>::constant(Lam, lam, Lam, 0.0);
    case OperatorVariant::Minus: return SignRule<Dim>::constant(lam, Lam, 0.0, Lam);
    case OperatorVariant::ScaledPlus: {
      const double m = scale_multiplier(spec.phi, kind.scale, spec.alpha);
      return SignRule<Dim>::constant(Lam, lam, Lam * m, 0.0);
    }
    case OperatorVariant::ScaledMinus: {
      const double m = scale_multiplier(spec.phi, kind.scale, spec.alpha);
      return SignRule<Dim>::constant(lam, Lam, 0.0, Lam * m);
    }
    case OperatorVariant::TildePlus:
    case OperatorVariant::TildeMinus: {
      if (spec.kernel_class != KernelClass::A4)
        fail(ErrorKind::ClassMismatch, "tilde operators need class A4 (two-sided) data");
      return kind.variant == OperatorVariant::TildePlus ? SignRule<Dim>::constant(Lam, lam, Lam, lam)
                                                        : SignRule<Dim>::constant(lam, Lam, lam, Lam);
    }
    case OperatorVariant::Linear: {
      if (!kind.kernel) fail(ErrorKind::Configuration, "linear operator without a kernel");
      const KernelSpec& ks = kind.kernel->spec();
      if (ks.alpha != spec.alpha || ks.phi.family() != spec.phi.family() || ks.phi.exponent() != spec.phi.exponent() ||
          ks.phi.scale_factor() != spec.phi.scale_factor())
        fail(ErrorKind::ClassMismatch, "linear kernel was built for a different alpha or phi");
      return SignRule<Dim>::linear(*kind.kernel);
    }
  }
  fail(ErrorKind::Internal, "unknown operator variant");
}

template <int Dim>
ExtremalEvaluator<Dim>::ExtremalEvaluator(KernelSpec spec, GridGeometry<Dim> geometry)
    : spec_(std::move(spec)),
      geometry_(geometry),
      stable_(RadialWeight::stable(spec_.alpha)),
      phi_(RadialWeight::phi(spec_.phi)),
      phi_cut_(RadialWeight::phi(spec_.phi, 1.0, true)) {
  spec_.validate();
}

template <int Dim>
const typename ExtremalEvaluator<Dim>::Tables& ExtremalEvaluator<Dim>::tables(double half_width, bool cutoff) const {
  const double h = geometry_.spacing();
  const int block = std::max(1, static_cast<int>(std::ceil(half_width / h - 0.5 - 1e-9)));
  std::lock_guard<std::mutex> lock(mutex_);
  auto& slot = cache_[{block, cutoff}];
  if (!slot) {
    const double a = (block + 0.5) * h - 0.25 * h;
    slot = std::make_unique<Tables>(
        Tables{precompute_weights(geometry_, stable_, a), precompute_weights(geometry_, phi_weight(cutoff), a)});
  }
  return *slot;
}

template <int Dim>
LevyTerms ExtremalEvaluator<Dim>::terms(const SignRule<Dim>& rule, const GridFunction<Dim>& u, const Index<Dim>& x) const {
  if (!(u.geometry() == geometry_)) fail(ErrorKind::Dimension, "grid function does not match the evaluator geometry");
  const Tables& t = tables(required_half_width(geometry_, u.exterior()), rule.phi_cutoff);
  return apply_levy(u, x, t.stable, t.phi, stable_, phi_weight(rule.phi_cutoff), rule);
}

template <int Dim>
OperatorEvaluation ExtremalEvaluator<Dim>::evaluate(const OperatorKind<Dim>& kind, const GridFunction<Dim>& u,
                                                    const Index<Dim>& x) const {
  const LevyTerms t = terms(sign_rule(kind, spec_), u, x);
  OperatorEvaluation e;
  e.near_field = t.near;
  e.mid_field = t.mid;
  e.tail = t.tail;
  e.value = t.value();
  e.tail_error_bound = t.tail_error;
  e.quadrature_error = t.quadrature_error;
  return e;
}

template <int Dim>
OperatorEvaluation eval_operator(const OperatorKind<Dim>& kind, const KernelSpec& spec, const GridFunction<Dim>& u,
                                 const Index<Dim>& x) {
  ExtremalEvaluator<Dim> ev(spec, u.geometry());
  return ev.evaluate(kind, u, x);
}

namespace {

// Angles θ ∈ [0, π) where |x ± ρ e_θ| crosses one of the radii.
std::vector<double> crossing_angles(const Point<2>& x, double rho, const std::vector<double>& radii) {
  std::vector<double> out;
  const double r = x.norm();
  if (r == 0.0) return out;
  const double phase = std::atan2(x[1], x[0]);
  for (double k : radii) {
    // |x + ρe|² = k²  ⇔  cos(θ - phase) = (k² - r² - ρ²)/(2rρ); the minus sign flips the cosine.
    const double c = (k * k - r * r - rho * rho) / (2.0 * r * rho);
    for (double s : {c, -c}) {
      if (s <= -1.0 || s >= 1.0) continue;
      const double a = std::acos(s);
      for (double th : {phase + a, phase - a}) {
        double t = std::fmod(th, kPi);
        if (t < 0.0) t += kPi;
        out.push_back(t);
      }
    }
  }
  return out;
}

}  // namespace

template <int Dim>
OperatorEvaluation eval_operator_field(const OperatorKind<Dim>& kind, const KernelSpec& spec, const FieldFunction<Dim>& f,
                                       const Point<Dim>& x, double h, double rel_tol) {
  if (!(h > 0.0)) fail(ErrorKind::Configuration, "near-field radius must be positive");
  spec.validate();
  const SignRule<Dim> rule = sign_rule(kind, spec);
  const RadialWeight rs = RadialWeight::stable(spec.alpha);
  const RadialWeight rp = RadialWeight::phi(spec.phi, 1.0, rule.phi_cutoff);
  const double u0 = f(x);
  OperatorEvaluation out;

  const double d = Dim;
  const double inner_s = 0.5 / d * sphere_measure(Dim) * rs.second_moment(h) / (h * h);
  const double inner_p = 0.5 / d * sphere_measure(Dim) * rp.second_moment(h) / (h * h);
  double near_mag = 0.0;
  for (int k = 0; k < Dim; ++k) {
    const Point<Dim> e = h * Point<Dim>::Unit(k);
    const double delta = f(Point<Dim>(x + e)) + f(Point<Dim>(x - e)) - 2.0 * u0;
    const Eigen::Array2d c = rule.coef(-1, delta >= 0.0);
    const double term = 2.0 * (c[0] * inner_s + c[1] * inner_p) * delta;
    out.near_field += term;
    near_mag += std::abs(term);
  }

  const double xr = x.norm();
  const bool bounded = std::isfinite(f.far_radius);
  std::vector<double> radii = f.kinks;
  if (bounded) radii.push_back(f.far_radius);
  std::vector<double> rho_breaks;
  for (double k : radii) {
    rho_breaks.push_back(std::abs(k - xr));
    rho_breaks.push_back(k + xr);
  }
  if (rule.phi_cutoff) rho_breaks.push_back(1.0);
  const double top = bounded ? xr + f.far_radius : 2.0 * (xr + 1.0) + (radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end()));

  QuadOptions opts;
  opts.rel_tol = rel_tol;
  opts.abs_tol = 1e-15 * (1.0 + std::abs(u0));
  opts.max_subdivisions = 4000;

  // Integrand in polar form: c(δ)·δ·k(ρ)/ρ (the Jacobian ρ^{d-1} cancels |y|^{-d} up to 1/ρ).
  const auto radial = [&](const Point<Dim>& e, int pair, double rho) {
    const Point<Dim> y = rho * e;
    const double delta = f(Point<Dim>(x + y)) + f(Point<Dim>(x - y)) - 2.0 * u0;
    if (delta == 0.0) return 0.0;
    const Eigen::Array2d c = rule.coef(pair, delta >= 0.0);
    return (c[0] * rs.density(rho) + c[1] * rp.density(rho)) * delta / rho;
  };

  QuadResult<Eigen::Array2d> mid;
  if constexpr (Dim == 1) {
    const auto g = [&](double rho) { return Eigen::Array2d(2.0 * radial(Point<1>(1.0), 0, rho), 0.0); };
    const auto pts = make_breakpoints(h, top, rho_breaks);
    mid = integrate_adaptive<Eigen::Array2d>(g, std::span<const double>(pts), opts);
    if (!bounded) {
      const auto rest = integrate_to_infinity<Eigen::Array2d>(g, top, opts);
      mid.value += rest.value;
      mid.error += rest.error;
    }
  } else {
    // Returns (value, inner error) so the outer pass integrates both.
    const auto ring = [&](double rho) {
      std::vector<double> extra = crossing_angles(x, rho, radii);
      for (int k = 1; k < 8; ++k) extra.push_back(k * kPi / 8.0);
      const auto pts = make_breakpoints(0.0, kPi, extra);
      QuadOptions inner = opts;
      inner.abs_tol = opts.abs_tol / (1.0 + rho);
      const auto r = integrate_adaptive<double>(
          [&](double theta) {
            const Point<2> e(std::cos(theta), std::sin(theta));
            return 2.0 * radial(e, KernelFunction<2>::sector_pair(e), rho);
          },
          std::span<const double>(pts), inner);
      return Eigen::Array2d(r.value, 2.0 * r.error);
    };
    const auto pts = make_breakpoints(h, top, rho_breaks);
    mid = integrate_adaptive<Eigen::Array2d>(ring, std::span<const double>(pts), opts);
    if (!bounded) {
      const auto rest = integrate_to_infinity<Eigen::Array2d>(ring, top, opts);
      mid.value += rest.value;
      mid.error += rest.error;
    }
  }
  out.mid_field = mid.value[0];
  const double mid_error = mid.error + std::abs(mid.value[1]) + (mid.converged ? 0.0 : std::abs(mid.value[0]));

  if (bounded) {
    const double delta = 2.0 * f.far_value - 2.0 * u0;
    const double gs = rs.tail_integral(top);
    const double gp = rp.tail_integral(top);
    double mass = 0.0;
    for (int p = 0; p < kSectorPairs<Dim>; ++p) {
      const Eigen::Array2d c = rule.coef(p, delta >= 0.0);
      mass += (Dim == 1 ? 2.0 : kPi / 4.0) * (c[0] * gs + c[1] * gp);
    }
    out.tail = mass * delta;
    out.tail_error_bound = 1e-12 * std::abs(out.tail);
  }
  out.value = out.near_field + out.mid_field + out.tail;
  out.quadrature_error = mid_error + 64.0 * std::numeric_limits<double>::epsilon() * (near_mag + std::abs(out.mid_field));
  return out;
}

template <int Dim>
OrderingReport operator_ordering_check(const KernelSpec& spec, const GridFunction<Dim>& u, const std::vector<Index<Dim>>& points) {
  if (spec.kernel_class != KernelClass::A4) fail(ErrorKind::ClassMismatch, "the ordering chain needs class A4 data");
  ExtremalEvaluator<Dim> ev(spec, u.geometry());
  const std::array<OperatorKind<Dim>, 4> kinds = {OperatorKind<Dim>::minus(), OperatorKind<Dim>::tilde_minus(),
                                                  OperatorKind<Dim>::tilde_plus(), OperatorKind<Dim>::plus()};
  OrderingReport report;
  report.max_violation = -kInf;
  report.max_gap = -kInf;
  for (const auto& x : points) {
    std::array<OperatorEvaluation, 4> e;
    std::array<double, 4> v;
    for (int k = 0; k < 4; ++k) {
      e[k] = ev.evaluate(kinds[k], u, x);
      v[k] = e[k].value;
    }
    for (int k = 0; k < 3; ++k) {
      const double gap = v[k] - v[k + 1];
      report.max_gap = std::max(report.max_gap, gap);
      report.max_violation = std::max(report.max_violation, gap - e[k].error_budget() - e[k + 1].error_budget());
    }
    report.values.push_back(v);
  }
  report.pass = points.empty() || report.max_violation <= 0.0;
  if (points.empty()) report.max_violation = report.max_gap = 0.0;
  return report;
}

namespace {

template <int Dim>
double euclidean_far_radius(const GridFunction<Dim>& u) {
  const double box = u.geometry().radius * std::sqrt(static_cast<double>(Dim));
  return std::max(box, u.exterior().far_radius());
}

template <int Dim>
Index<Dim> node_of(const GridGeometry<Dim>& g, const Point<Dim>& z) {
  const Index<Dim> m = g.nearest(z);
  if (!g.contains(m) || (g.coord(m) - z).norm() > 1e-9 * g.spacing())
    fail(ErrorKind::Resolution, "rescaling centre must be a grid node");
  return m;
}

}  // namespace

template <int Dim>
FieldFunction<Dim> as_field(const GridFunction<Dim>& u) {
  FieldFunction<Dim> f;
  f.value = [u](const Point<Dim>& z) { return u.at(z); };
  f.far_radius = euclidean_far_radius(u);
  f.far_value = u.exterior().far_value();
  f.kinks = u.exterior().formula.kinks;
  f.sup_bound = u.sup_bound();
  f.label = "grid";
  return f;
}

template <int Dim>
GridFunction<Dim> rescale_function(const GridFunction<Dim>& u, const Point<Dim>& x0, int i, double amplitude) {
  if (i < 0 || i > 40) fail(ErrorKind::Configuration, "scale index must lie in [0, 40]");
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) fail(ErrorKind::Configuration, "amplitude must be positive");
  const auto& g = u.geometry();
  const Index<Dim> m0 = node_of(g, x0);
  int shift = 0;
  for (int d = 0; d < Dim; ++d) shift = std::max(shift, std::abs(m0[d] - g.cells / 2));
  const int cells = g.cells - 2 * shift;
  if (cells < 4) fail(ErrorKind::Resolution, "rescaled grid would have fewer than 4 cells per axis");
  const double s = std::exp2(static_cast<double>(i));
  GridGeometry<Dim> gv{s * cells * g.spacing() / 2.0, cells};
  Eigen::VectorXd values(gv.size());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const Index<Dim> mv = gv.multi(k);
    const Index<Dim> mu = (m0.array() - cells / 2 + mv.array()).matrix();
    values[k] = u.values()[g.flat(mu)] / amplitude;
  }
  FieldFunction<Dim> f;
  const Point<Dim> c = x0;
  const double inv = 1.0 / s;
  f.value = [u, c, inv, amplitude](const Point<Dim>& y) { return u.at(Point<Dim>(c + inv * y)) / amplitude; };
  f.far_radius = s * (euclidean_far_radius(u) + x0.norm());
  f.far_value = u.exterior().far_value() / amplitude;
  f.sup_bound = u.sup_bound() / amplitude;
  f.label = "rescaled";
  return GridFunction<Dim>(gv, std::move(values), Exterior<Dim>::from_formula(std::move(f)), u.sup_bound() / amplitude);
}

template <int Dim>
Index<Dim> rescaled_node_origin(const GridFunction<Dim>& u, const Point<Dim>& x0, const GridFunction<Dim>& v, const Index<Dim>& y) {
  const Index<Dim> m0 = node_of(u.geometry(), x0);
  return (m0.array() - v.geometry().cells / 2 + y.array()).matrix();
}

template <int Dim>
ScalingReport scaling_inequality_check(const GridFunction<Dim>& u, const Point<Dim>& x0, int i, double amplitude,
                                       const KernelSpec& spec, const std::vector<Index<Dim>>& points) {
  const GridFunction<Dim> v = rescale_function(u, x0, i, amplitude);
  ExtremalEvaluator<Dim> eu(spec, u.geometry());
  ExtremalEvaluator<Dim> evv(spec, v.geometry());
  const double factor = std::exp2(-i * spec.alpha) / amplitude;
  ScalingReport report;
  report.max_violation = -kInf;
  for (const auto& y : points) {
    if (!v.geometry().interior(y)) fail(ErrorKind::Precondition, "scaling check points must be interior nodes of the rescaled grid");
    const Index<Dim> xh = rescaled_node_origin(u, x0, v, y);
    const OperatorEvaluation left = eu.evaluate(OperatorKind<Dim>::minus(), u, xh);
    const OperatorEvaluation right = evv.evaluate(OperatorKind<Dim>::mminus(i), v, y);
    const double lhs = factor * left.value;
    const double budget = factor * left.error_budget() + right.error_budget();
    report.values.push_back({lhs, right.value, budget});
    report.max_violation = std::max(report.max_violation, right.value - lhs - budget);
    report.min_margin = std::min(report.min_margin, lhs - right.value);
  }
  report.pass = points.empty() || report.max_violation <= 0.0;
  if (points.empty()) report.max_violation = 0.0;
  return report;
}

#define PUCCI_INSTANTIATE(D)                                                                                                 \
  template struct OperatorKind<D>;                                                                                           \
  template SignRule<D> sign_rule(const OperatorKind<D>&, const KernelSpec&);                                                 \
  template class ExtremalEvaluator<D>;                                                                                       \
  template OperatorEvaluation eval_operator(const OperatorKind<D>&, const KernelSpec&, const GridFunction<D>&, const Index<D>&); \
  template OperatorEvaluation eval_operator_field(const OperatorKind<D>&, const KernelSpec&, const FieldFunction<D>&,        \
                                                  const Point<D>&, double, double);                                          \
  template OrderingReport operator_ordering_check(const KernelSpec&, const GridFunction<D>&, const std::vector<Index<D>>&);  \
  template GridFunction<D> rescale_function(const GridFunction<D>&, const Point<D>&, int, double);                           \
  template Index<D> rescaled_node_origin(const GridFunction<D>&, const Point<D>&, const GridFunction<D>&, const Index<D>&);  \
  template ScalingReport scaling_inequality_check(const GridFunction<D>&, const Point<D>&, int, double, const KernelSpec&,    \
                                                  const std::vector<Index<D>>&);                                             \
  template FieldFunction<D> as_field(const GridFunction<D>&);

PUCCI_INSTANTIATE(1)
PUCCI_INSTANTIATE(2)

#undef PUCCI_INSTANTIATE

}  // namespace pucci
