#include "oracle.hpp"
#include "pucci/extremal_ops.hpp"

#include <doctest.h>

using namespace pucci;

namespace {

double bump(double x) {
  const double t = 1.0 - x * x;
  return t > 0.0 ? t * t : 0.0;
}

FieldFunction<1> bump_field() {
  FieldFunction<1> f;
  f.value = [](const Point<1>& z) { return bump(z[0]); };
  f.far_radius = 1.0;
  f.far_value = 0.0;
  f.kinks = {1.0};
  f.sup_bound = 1.0;
  return f;
}

}  // namespace

TEST_CASE("radial weight integrals match Boost quadrature") {
  const auto phi = ScalingFunction::log_power(0.7);
  const std::vector<RadialWeight> weights = {RadialWeight::stable(0.8), RadialWeight::stable(1.6, 1.7), RadialWeight::phi(phi, 1.3),
                                             RadialWeight::phi(ScalingFunction::power(0.4)), RadialWeight::phi(phi, 1.0, true)};
  for (const auto& w : weights) {
    for (double r : {0.03, 0.5, 1.0, 2.5}) {
      const auto g = [&](double rho) { return w.density(rho) / rho; };
      const auto h = [&](double rho) { return rho < 1e-100 ? 0.0 : rho * w.density(rho); };
      double tail = oracle::es(g, r);
      double moment = w.cutoff() ? (r > 1.0 ? oracle::gk(h, 1.0, r) : 0.0) : oracle::ts(h, 0.0, r);
      if (w.cutoff() && r < 1.0) tail = oracle::es(g, 1.0);
      CHECK(w.tail_integral(r) == doctest::Approx(tail).epsilon(1e-9));
      CHECK(w.second_moment(r) == doctest::Approx(moment).epsilon(1e-9));
    }
  }
}

TEST_CASE("apply_levy on the bump matches the Boost oracle") {
  const auto geo = GridGeometry<1>::from_spacing(2.0, 1.0 / 128.0);
  const auto f = bump_field();
  const auto u = GridFunction<1>::sample(geo, f);
  for (double alpha : {0.8, 1.6}) {
    for (bool stable_part : {true, false}) {
      const auto rs = RadialWeight::stable(alpha, stable_part ? 1.0 : 0.0);
      const auto rp = RadialWeight::phi(ScalingFunction::power(0.5 * alpha), stable_part ? 0.0 : 1.0);
      const double a = required_half_width(geo, u.exterior());
      const auto ws = precompute_weights(geo, rs, a);
      const auto wp = precompute_weights(geo, rp, a);
      const auto rule = SignRule<1>::constant(1.0, 1.0, 1.0, 1.0);
      const RadialWeight& active = stable_part ? rs : rp;
      for (double x0 : {-0.7, 0.0, 0.3, 1.25}) {
        const Index<1> m = geo.nearest(Point<1>(x0));
        const double x = geo.coord(m)[0];
        const auto t = apply_levy(u, m, ws, wp, rs, rp, rule);
        const double ref = oracle::levy_1d(bump, std::abs(x) < 1.0 ? 12.0 * x * x - 4.0 : 0.0, x, [&](double y) { return active.density(y); },
                                           {std::abs(1.0 - x), std::abs(1.0 + x)}, 1.0 + std::abs(x));
        CAPTURE(alpha);
        CAPTURE(stable_part);
        CAPTURE(x);
        CHECK(t.value() == doctest::Approx(ref).epsilon(1e-3));
      }
    }
  }
}

TEST_CASE("constants are annihilated") {
  const GridGeometry<2> geo{1.0, 16};
  KernelSpec s;
  s.lambda = 1.0;
  s.Lambda = 2.0;
  s.alpha = 1.1;
  s.phi = ScalingFunction::log_power(0.5);
  const auto u = GridFunction<2>::constant(geo, 3.5);
  for (const auto& kind : {OperatorKind<2>::plus(), OperatorKind<2>::minus()}) {
    const auto e = eval_operator(kind, s, u, Index<2>(5, 9));
    CHECK(std::abs(e.value) <= 1e-12);
  }
}

TEST_CASE("tail closure is exact for a constant exterior") {
  const GridGeometry<1> geo{1.0, 64};
  const auto rs = RadialWeight::stable(1.2);
  const auto rp = RadialWeight::phi(ScalingFunction::power(0.5), 0.0);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(geo.size());
  v[geo.flat(geo.center())] = 1.0;
  const GridFunction<1> u(geo, v, Exterior<1>::constant_value(2.0));
  const double a = required_half_width(geo, u.exterior());
  const auto ws = precompute_weights(geo, rs, a);
  const auto wp = precompute_weights(geo, rp, a);
  const auto t = tail_contribution(u, geo.center(), ws, wp, rs, rp, SignRule<1>::constant(1, 1, 1, 1));
  // δ = 2(g - u0) for |y| > a, integrated over both half-lines: 4·(2 - 1)·G(a).
  CHECK(t.value(1.0) == doctest::Approx(4.0 * rs.tail_integral(ws.half_width)).epsilon(1e-12));
}

TEST_CASE("weights reject mismatched grids") {
  const GridGeometry<1> geo{1.0, 64};
  const GridGeometry<1> other{1.0, 32};
  const auto rs = RadialWeight::stable(1.2);
  const auto rp = RadialWeight::phi(ScalingFunction::power(0.5), 0.0);
  const auto ws = precompute_weights(other, rs, 2.0);
  const auto wp = precompute_weights(other, rp, 2.0);
  const auto u = GridFunction<1>::constant(geo, 1.0);
  CHECK_THROWS_AS(apply_levy(u, geo.center(), ws, wp, rs, rp, SignRule<1>::constant(1, 1, 1, 1)), Error);
}
