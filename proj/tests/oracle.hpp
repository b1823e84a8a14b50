#pragma once

// Independent reference integrals built on Boost.Math quadrature.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Fn = std::function<double(double)>;

/// ∫_a^b f by adaptive Gauss-Kronrod (b may be +inf).
inline double gk(const Fn& f, double a, double b, double tol = 1e-13) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol, &err);
}

/// ∫_0^b f for integrands with an integrable endpoint singularity at 0.
inline double ts(const Fn& f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> q(12);
  return q.integrate(f, a, b, 1e-13);
}

/// ∫_a^∞ f.
inline double es(const Fn& f, double a) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double t) { return f(a + t); }, 1e-13);
}

/// 1-d Lévy integral ∫_R δ(u, x, y) w(|y|)/|y| dy = 2 ∫_0^∞ δ w/y dy.
/// `u2` is u''(x), used for δ on y < y0 where the direct difference cancels.
/// `breaks` lists y values where the integrand is not smooth; `far` is where
/// u becomes constant on both sides.
inline double levy_1d(const Fn& u, double u2, double x, const Fn& w, std::vector<double> breaks, double far) {
  const double y0 = 1e-4;
  const double u0 = u(x);
  const auto integrand = [&](double y) {
    if (y <= 1e-100) return 0.0;  // below this the integrand's share is negligible and w(y) overflows
    const double d = y < y0 ? u2 * y * y : u(x + y) + u(x - y) - 2.0 * u0;
    return d * w(y) / y;
  };
  breaks.push_back(far);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double b) { return !(b > 0.0) || b > far; }), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double total = ts(integrand, 0.0, breaks.front());
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) total += gk(integrand, breaks[i], breaks[i + 1]);
  total += es(integrand, far);
  return 2.0 * total;
}

}  // namespace oracle
