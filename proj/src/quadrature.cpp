#include "pucci/quadrature.hpp"

#include "pucci/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pucci {

RadialWeight RadialWeight::stable(double alpha, double prefactor) {
  if (!(alpha > 0.0 && alpha < 2.0)) fail(ErrorKind::Configuration, "stable weight needs alpha in (0, 2)");
  if (!(prefactor >= 0.0) || !std::isfinite(prefactor)) fail(ErrorKind::Configuration, "weight prefactor must be >= 0");
  RadialWeight w;
  w.kind_ = RadialKind::Stable;
  w.alpha_ = alpha;
  w.prefactor_ = prefactor;
  return w;
}

RadialWeight RadialWeight::phi(ScalingFunction phi, double prefactor, bool cutoff) {
  if (!(prefactor >= 0.0) || !std::isfinite(prefactor)) fail(ErrorKind::Configuration, "weight prefactor must be >= 0");
  RadialWeight w;
  w.kind_ = RadialKind::Phi;
  w.prefactor_ = prefactor;
  w.cutoff_ = cutoff;
  w.phi_ = std::move(phi);
  // The Taylor-matched inner cell needs ∫_0 ρ w(ρ) dρ < ∞.
  const double h1 = w.h_raw(1.0);
  if (!std::isfinite(h1)) fail(ErrorKind::Configuration, "phi weight is not integrable against |y|^2 near 0");
  return w;
}

bool RadialWeight::closed_form() const { return kind_ == RadialKind::Stable || phi_->family() == PhiFamily::Power; }

double RadialWeight::density(double rho) const {
  if (kind_ == RadialKind::Stable) return prefactor_ * (2.0 - alpha_) * std::pow(rho, -alpha_);
  if (cutoff_ && rho < 1.0) return 0.0;
  return prefactor_ * (*phi_)(1.0 / rho);
}

double RadialWeight::g_raw(double r) const {
  if (kind_ == RadialKind::Stable) return (2.0 - alpha_) * std::pow(r, -alpha_) / alpha_;
  return phi_->dini_partial(1.0 / r);
}

double RadialWeight::h_raw(double r) const {
  if (kind_ == RadialKind::Stable) return std::pow(r, 2.0 - alpha_);
  return phi_->upper_moment(1.0 / r);
}

double RadialWeight::tail_integral(double r) const {
  if (!(r > 0.0)) fail(ErrorKind::Domain, "tail integral needs r > 0");
  if (std::isinf(r)) return 0.0;
  if (cutoff_) r = std::max(r, 1.0);
  return prefactor_ * g_raw(r);
}

double RadialWeight::second_moment(double r) const {
  if (!(r > 0.0)) return 0.0;
  if (cutoff_) return r <= 1.0 ? 0.0 : prefactor_ * (h_raw(r) - h_raw(1.0));
  return prefactor_ * h_raw(r);
}

Eigen::Array2d RadialWeight::interval(double lo, double hi) const {
  if (cutoff_) lo = std::max(lo, 1.0);
  if (!(hi > lo)) return Eigen::Array2d::Zero();
  if (closed_form()) {
    return {tail_integral(lo) - tail_integral(hi), second_moment(hi) - second_moment(lo)};
  }
  QuadOptions opts;
  opts.rel_tol = 1e-12;
  const auto r = integrate_adaptive<Eigen::Array2d>(
      [&](double rho) {
        const double w = density(rho);
        return Eigen::Array2d(w / rho, rho * w);
      },
      lo, hi, opts);
  return r.value;
}

namespace {

inline constexpr std::array<double, 4> kGauss4Nodes = {-0.861136311594052575223946488892809, -0.339981043584856264802665759103245,
                                                      0.339981043584856264802665759103245, 0.861136311594052575223946488892809};
inline constexpr std::array<double, 4> kGauss4Weights = {0.347854845137453857373063949221999, 0.652145154862546142626936050778001,
                                                        0.652145154862546142626936050778001, 0.347854845137453857373063949221999};

struct CellIntegral {
  Eigen::Array2d value = Eigen::Array2d::Zero();
  double error = 0.0;
};

// Polar integration of (K, |y|²K) over the axis-aligned box [lo, hi] minus B_{rho_min}.
CellIntegral polar_cell(const RadialWeight& w, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, double rho_min) {
  std::vector<double> angles;
  for (int cx = 0; cx < 2; ++cx)
    for (int cy = 0; cy < 2; ++cy) angles.push_back(std::atan2(cy ? hi[1] : lo[1], cx ? hi[0] : lo[0]));
  std::sort(angles.begin(), angles.end());
  const auto ray = [&](double theta) -> Eigen::Array2d {
    const double e[2] = {std::cos(theta), std::sin(theta)};
    double t_in = 0.0;
    double t_out = kInf;
    for (int k = 0; k < 2; ++k) {
      if (std::abs(e[k]) < 1e-300) {
        if (lo[k] > 0.0 || hi[k] < 0.0) return Eigen::Array2d::Zero();
        continue;
      }
      double a = lo[k] / e[k];
      double b = hi[k] / e[k];
      if (a > b) std::swap(a, b);
      t_in = std::max(t_in, a);
      t_out = std::min(t_out, b);
    }
    t_in = std::max(t_in, rho_min);
    if (!(t_out > t_in)) return Eigen::Array2d::Zero();
    return w.interval(t_in, t_out);
  };
  QuadOptions opts;
  opts.rel_tol = 1e-11;
  const auto r = integrate_adaptive<Eigen::Array2d>(ray, std::span<const double>(angles), opts);
  return {r.value, r.error};
}

CellIntegral nested_cell(const RadialWeight& w, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
  QuadOptions opts;
  opts.rel_tol = 1e-11;
  const auto point = [&](double x, double y) {
    const double r2 = x * x + y * y;
    const double wv = w.density(std::sqrt(r2));
    return Eigen::Array2d(wv / r2, wv);
  };
  const auto r = integrate_adaptive<Eigen::Array2d>(
      [&](double x) {
        return integrate_adaptive<Eigen::Array2d>([&](double y) { return point(x, y); }, lo[1], hi[1], opts).value;
      },
      lo[0], hi[0], opts);
  return {r.value, r.error};
}

template <std::size_t N>
Eigen::Array2d tensor_gauss(const RadialWeight& w, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                            const std::array<double, N>& nodes, const std::array<double, N>& weights) {
  const Eigen::Vector2d c = 0.5 * (lo + hi);
  const Eigen::Vector2d half = 0.5 * (hi - lo);
  Eigen::Array2d sum = Eigen::Array2d::Zero();
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      const double x = c[0] + half[0] * nodes[a];
      const double y = c[1] + half[1] * nodes[b];
      const double r2 = x * x + y * y;
      const double wv = w.density(std::sqrt(r2));
      sum += weights[a] * weights[b] * Eigen::Array2d(wv / r2, wv);
    }
  }
  return sum * half[0] * half[1];
}

template <int Dim>
int cell_pair(const Index<Dim>& j) {
  return KernelFunction<Dim>::sector_pair(j.template cast<double>());
}

}  // namespace

template <int Dim>
CellWeights<Dim> precompute_weights(const GridGeometry<Dim>& geometry, const RadialWeight& w, double tail_radius) {
  const double h = geometry.spacing();
  if (!(tail_radius > 0.0) || !std::isfinite(tail_radius)) fail(ErrorKind::Configuration, "tail radius must be positive and finite");
  CellWeights<Dim> out;
  out.spacing = h;
  out.block = std::max(1, static_cast<int>(std::ceil(tail_radius / h - 0.5 - 1e-9)));
  out.half_width = (out.block + 0.5) * h;
  const int M = out.block;
  double corr = 0.0;
  double worst = 0.0;
  const auto record = [&](const Index<Dim>& j, const Eigen::Array2d& v, double err) {
    if (v[0] < 0.0 || v[1] < 0.0) fail(ErrorKind::Internal, "negative cell weight");
    const double y2 = (j.template cast<double>() * h).squaredNorm();
    out.offsets.push_back(j);
    out.pair.push_back(cell_pair<Dim>(j));
    out.weights.push_back(v[0]);
    out.moments.push_back(v[1]);
    corr += v[1] - v[0] * y2;
    if (v[0] > 0.0) worst = std::max(worst, err / v[0]);
  };
  const double rho_min = w.cutoff() ? std::max(h, 1.0) : h;
  if constexpr (Dim == 1) {
    for (int j = 1; j <= M; ++j) {
      const double lo = std::max((j - 0.5) * h, h);
      const double hi = (j + 0.5) * h;
      const Eigen::Array2d v = w.interval(lo, hi);
      record(Index<1>(j), v, 1e-12 * v[0]);
    }
    out.tail_mass[0] = 2.0 * w.tail_integral(out.half_width);
  } else {
    for (int j1 = 0; j1 <= M; ++j1) {
      for (int j2 = -M; j2 <= M; ++j2) {
        if (j1 == 0 && j2 <= 0) continue;
        const Index<2> j(j1, j2);
        const Eigen::Vector2d lo((j1 - 0.5) * h, (j2 - 0.5) * h);
        const Eigen::Vector2d hi((j1 + 0.5) * h, (j2 + 0.5) * h);
        const double dx = std::max({lo[0], -hi[0], 0.0});
        const double dy = std::max({lo[1], -hi[1], 0.0});
        const double dmin = std::hypot(dx, dy);
        const double dmax = std::hypot(std::max(std::abs(lo[0]), std::abs(hi[0])), std::max(std::abs(lo[1]), std::abs(hi[1])));
        CellIntegral c;
        const int level = std::max(std::abs(j1), std::abs(j2));
        if (dmax <= rho_min) {
          // entirely inside the excluded ball
        } else if (dmin < rho_min) {
          c = polar_cell(w, lo, hi, rho_min);
        } else if (level <= 4) {
          c = nested_cell(w, lo, hi);
        } else {
          const Eigen::Array2d g5 = tensor_gauss(w, lo, hi, kGauss5Nodes, kGauss5Weights);
          const Eigen::Array2d g4 = tensor_gauss(w, lo, hi, kGauss4Nodes, kGauss4Weights);
          c = {g5, (g5 - g4).abs().maxCoeff()};
        }
        record(j, c.value, c.error);
      }
    }
    const double a = out.half_width;
    QuadOptions opts;
    opts.rel_tol = 1e-11;
    for (int p = 0; p < kSectorPairs<2>; ++p) {
      const double t0 = p * kPi / 8.0;
      const double t1 = (p + 1) * kPi / 8.0;
      // Square boundary distance has a kink at odd multiples of π/4 only, which are sector edges.
      const auto r = integrate_adaptive<double>(
          [&](double theta) {
            const double m = std::max(std::abs(std::cos(theta)), std::abs(std::sin(theta)));
            return w.tail_integral(a / m);
          },
          t0, t1, opts);
      out.tail_mass[p] = 2.0 * r.value;
      if (r.value > 0.0) worst = std::max(worst, r.error / r.value);
    }
  }
  const double d = Dim;
  out.inner_coeff = 0.5 / d * sphere_measure(Dim) * w.second_moment(h);
  out.moment_correction = corr / d;
  out.relative_error = std::max(worst, 1e-12);
  return out;
}

template <int Dim>
SignRule<Dim> SignRule<Dim>::constant(double s_pos, double s_neg, double p_pos, double p_neg) {
  SignRule r;
  r.stable_pos.setConstant(s_pos);
  r.stable_neg.setConstant(s_neg);
  r.phi_pos.setConstant(p_pos);
  r.phi_neg.setConstant(p_neg);
  return r;
}

template <int Dim>
SignRule<Dim> SignRule<Dim>::linear(const KernelFunction<Dim>& k) {
  SignRule r;
  r.stable_pos = k.c_stable();
  r.stable_neg = k.c_stable();
  r.phi_pos = k.c_phi();
  r.phi_neg = k.c_phi();
  r.phi_cutoff = k.phi_cutoff();
  return r;
}

template <int Dim>
double required_half_width(const GridGeometry<Dim>& geometry, const Exterior<Dim>& exterior) {
  const double box = 2.0 * geometry.radius;
  if (exterior.kind != ExteriorKind::Formula || std::isinf(exterior.far_radius())) return box;
  return std::max(box, geometry.radius * std::sqrt(static_cast<double>(Dim)) + exterior.far_radius());
}

namespace {

template <int Dim>
void check_tables(const CellWeights<Dim>& ws, const CellWeights<Dim>& wp, double h) {
  if (ws.offsets.size() != wp.offsets.size() || ws.block != wp.block || std::abs(ws.spacing - h) > 1e-14 * h ||
      std::abs(wp.spacing - h) > 1e-14 * h)
    fail(ErrorKind::Dimension, "weight tables do not match the grid");
}

// Numeric tail for Formula exteriors that never become constant.
template <int Dim>
TailTerms numeric_tail(const GridFunction<Dim>& u, const Point<Dim>& x, double u0, double a, const RadialWeight& rs,
                       const RadialWeight& rp, const SignRule<Dim>& rule) {
  QuadOptions opts;
  opts.rel_tol = 1e-9;
  opts.abs_tol = 1e-14;
  const auto integrand = [&](const Point<Dim>& y, int pair, double rho) -> Eigen::Array2d {
    const double D = u.at(Point<Dim>(x + y)) + u.at(Point<Dim>(x - y));
    const double delta = D - 2.0 * u0;
    const Eigen::Array2d c = rule.coef(pair, delta >= 0.0);
    const double k = c[0] * rs.density(rho) + c[1] * rp.density(rho);
    return Eigen::Array2d(k * D, k);
  };
  QuadResult<Eigen::Array2d> r;
  try {
    if constexpr (Dim == 1) {
      r = integrate_to_infinity<Eigen::Array2d>(
          [&](double rho) -> Eigen::Array2d { return integrand(Point<1>(rho), 0, rho) / rho; }, a, opts);
      r.value *= 2.0;
      r.error *= 2.0;
    } else {
      std::vector<double> breaks;
      for (int k = 0; k <= 8; ++k) breaks.push_back(k * kPi / 8.0);
      double inner_error = 0.0;
      r = integrate_adaptive<Eigen::Array2d>(
          [&](double theta) -> Eigen::Array2d {
            const Point<2> e(std::cos(theta), std::sin(theta));
            const int pair = KernelFunction<2>::sector_pair(e);
            const double start = a / std::max(std::abs(e[0]), std::abs(e[1]));
            const auto in = integrate_to_infinity<Eigen::Array2d>(
                [&](double rho) -> Eigen::Array2d { return integrand(Point<2>(rho * e), pair, rho) / rho; }, start, opts);
            inner_error = std::max(inner_error, in.error);
            return in.value;
          },
          std::span<const double>(breaks), opts);
      r.value *= 2.0;
      r.error = 2.0 * (r.error + kPi * inner_error);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Divergence) fail(ErrorKind::UnboundedFunction, "exterior formula tail integral diverges");
    throw;
  }
  TailTerms t;
  t.constant = r.value[0];
  t.diagonal = 2.0 * r.value[1];
  t.error = r.error * (1.0 + 2.0 * std::abs(u0));
  return t;
}

}  // namespace

template <int Dim>
TailTerms tail_contribution(const GridFunction<Dim>& u, const Index<Dim>& x, const CellWeights<Dim>& ws,
                            const CellWeights<Dim>& wp, const RadialWeight& rs, const RadialWeight& rp,
                            const SignRule<Dim>& rule) {
  check_tables(ws, wp, u.geometry().spacing());
  const auto& ext = u.exterior();
  const double u0 = u.at(x);
  const double a = ws.half_width;
  if (ext.kind == ExteriorKind::Formula && std::isinf(ext.far_radius()))
    return numeric_tail(u, u.geometry().coord(x), u0, a, rs, rp, rule);
  if (a + 1e-12 < required_half_width(u.geometry(), ext)) fail(ErrorKind::Dimension, "weight block too small for the exterior");
  const double far = ext.far_value();
  const bool positive = far - u0 >= 0.0;
  double mass = 0.0;
  for (int p = 0; p < kSectorPairs<Dim>; ++p) {
    const Eigen::Array2d c = rule.coef(p, positive);
    mass += c[0] * ws.tail_mass[p] + c[1] * wp.tail_mass[p];
  }
  TailTerms t;
  t.constant = 2.0 * far * mass;
  t.diagonal = 2.0 * mass;
  t.error = std::abs(t.value(u0)) * std::max(ws.relative_error, wp.relative_error) + 1e-15 * std::abs(t.constant);
  return t;
}

template <int Dim>
LevyTerms apply_levy(const GridFunction<Dim>& u, const Index<Dim>& x, const CellWeights<Dim>& ws, const CellWeights<Dim>& wp,
                     const RadialWeight& rs, const RadialWeight& rp, const SignRule<Dim>& rule) {
  const double h = u.geometry().spacing();
  check_tables(ws, wp, h);
  const double u0 = u.at(x);
  LevyTerms out;
  double magnitude = 0.0;
  double weight_error = 0.0;
  const double rel = std::max(ws.relative_error, wp.relative_error);
  const std::size_t n = ws.offsets.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Index<Dim>& j = ws.offsets[k];
    const double d = u.at(Index<Dim>(x + j)) + u.at(Index<Dim>(x - j)) - 2.0 * u0;
    if (d == 0.0) continue;
    const Eigen::Array2d c = rule.coef(ws.pair[k], d >= 0.0);
    const double term = 2.0 * (c[0] * ws.weights[k] + c[1] * wp.weights[k]) * d;
    out.mid += term;
    magnitude += std::abs(term);
  }
  weight_error += rel * magnitude;
  const double inner_s = ws.inner_effective() / (h * h);
  const double inner_p = wp.inner_effective() / (h * h);
  for (int k = 0; k < Dim; ++k) {
    const Index<Dim> e = Index<Dim>::Unit(k);
    const double d = u.at(Index<Dim>(x + e)) + u.at(Index<Dim>(x - e)) - 2.0 * u0;
    const Eigen::Array2d c = rule.coef(-1, d >= 0.0);
    const double term = 2.0 * (c[0] * inner_s + c[1] * inner_p) * d;
    out.near += term;
    magnitude += std::abs(term);
  }
  const TailTerms t = tail_contribution(u, x, ws, wp, rs, rp, rule);
  out.tail = t.value(u0);
  out.tail_error = t.error;
  magnitude += std::abs(out.tail);
  out.quadrature_error = weight_error + 64.0 * std::numeric_limits<double>::epsilon() * magnitude;
  return out;
}

template CellWeights<1> precompute_weights(const GridGeometry<1>&, const RadialWeight&, double);
template CellWeights<2> precompute_weights(const GridGeometry<2>&, const RadialWeight&, double);
template struct SignRule<1>;
template struct SignRule<2>;
template double required_half_width(const GridGeometry<1>&, const Exterior<1>&);
template double required_half_width(const GridGeometry<2>&, const Exterior<2>&);
template TailTerms tail_contribution(const GridFunction<1>&, const Index<1>&, const CellWeights<1>&, const CellWeights<1>&,
                                     const RadialWeight&, const RadialWeight&, const SignRule<1>&);
template TailTerms tail_contribution(const GridFunction<2>&, const Index<2>&, const CellWeights<2>&, const CellWeights<2>&,
                                     const RadialWeight&, const RadialWeight&, const SignRule<2>&);
template LevyTerms apply_levy(const GridFunction<1>&, const Index<1>&, const CellWeights<1>&, const CellWeights<1>&,
                              const RadialWeight&, const RadialWeight&, const SignRule<1>&);
template LevyTerms apply_levy(const GridFunction<2>&, const Index<2>&, const CellWeights<2>&, const CellWeights<2>&,
                              const RadialWeight&, const RadialWeight&, const SignRule<2>&);

}  // namespace pucci
