#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature over finite intervals with
// breakpoints, plus a dyadic-shell driver for [a, ∞). The value type may be
// `double` or a fixed-size Eigen array, so several integrands sharing one
// expensive evaluation are integrated in a single pass.

#include "pucci/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <type_traits>
#include <vector>

namespace pucci {

struct QuadOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_subdivisions = 2000;
};

template <class V>
struct QuadResult {
  V value;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

namespace detail {

template <class V>
V zero_value() {
  if constexpr (std::is_arithmetic_v<V>) {
    return V(0);
  } else {
    return V::Zero();
  }
}

template <class V>
double magnitude(const V& v) {
  if constexpr (std::is_arithmetic_v<V>) {
    return std::abs(v);
  } else {
    return v.abs().maxCoeff();
  }
}

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class V>
struct Segment {
  double a;
  double b;
  V value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class V, class F>
Segment<V> gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  V kronrod = zero_value<V>();
  V gauss = zero_value<V>();
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const V sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  const V mid = f(center);
  kronrod += kKronrodWeights[7] * mid;
  gauss += kGaussWeights[3] * mid;
  kronrod *= half;
  gauss *= half;
  const V diff = kronrod - gauss;
  return {a, b, kronrod, magnitude<V>(diff)};
}

}  // namespace detail

/// Integrates f over [points.front(), points.back()], starting from the
/// segments delimited by `points` (which must be sorted) and bisecting the
/// segment with the largest error estimate until the total estimate drops
/// below max(abs_tol, rel_tol·|value|).
template <class V, class F>
QuadResult<V> integrate_adaptive(F&& f, std::span<const double> points, const QuadOptions& opts = {}) {
  QuadResult<V> out{detail::zero_value<V>(), 0.0, 0, true};
  if (points.size() < 2) return out;
  std::priority_queue<detail::Segment<V>> heap;
  V total = detail::zero_value<V>();
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i + 1] > points[i])) continue;
    auto seg = detail::gauss_kronrod_15<V>(f, points[i], points[i + 1]);
    out.evaluations += 15;
    total += seg.value;
    total_error += seg.error;
    heap.push(std::move(seg));
  }
  int subdivisions = 0;
  while (!heap.empty()) {
    const double target = std::max(opts.abs_tol, opts.rel_tol * detail::magnitude<V>(total));
    if (total_error <= target) break;
    if (subdivisions >= opts.max_subdivisions) {
      out.converged = false;
      break;
    }
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval exhausted at machine resolution; accept its estimate.
      out.converged = false;
      break;
    }
    heap.pop();
    auto left = detail::gauss_kronrod_15<V>(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15<V>(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(std::move(left));
    heap.push(std::move(right));
    ++subdivisions;
  }
  // Re-sum from the leaves to shed accumulated cancellation.
  total = detail::zero_value<V>();
  total_error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_error += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_error;
  return out;
}

template <class V, class F>
QuadResult<V> integrate_adaptive(F&& f, double a, double b, const QuadOptions& opts = {}) {
  const std::array<double, 2> pts{a, b};
  return integrate_adaptive<V>(std::forward<F>(f), std::span<const double>(pts), opts);
}

/// Sorts, clips to [a, b] and deduplicates a breakpoint list, always keeping a and b.
inline std::vector<double> make_breakpoints(double a, double b, std::vector<double> extra) {
  std::vector<double> pts{a, b};
  for (double p : extra) {
    if (std::isfinite(p) && p > a && p < b) pts.push_back(p);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double x, double y) { return std::abs(x - y) <= 1e-15 * std::max(1.0, std::abs(x)); }),
            pts.end());
  return pts;
}

/// Integrates f over [a, ∞) shell by shell ([a, 2a], [2a, 4a], ... for a > 0).
/// Stops once a shell contributes less than rel_tol·|total| three times in a
/// row; throws Divergence when shells keep contributing after `max_shells`.
template <class V, class F>
QuadResult<V> integrate_to_infinity(F&& f, double a, const QuadOptions& opts = {}, int max_shells = 200) {
  if (!(a > 0.0)) fail(ErrorKind::Precondition, "integrate_to_infinity needs a positive lower limit");
  QuadResult<V> out{detail::zero_value<V>(), 0.0, 0, true};
  int quiet = 0;
  double lo = a;
  for (int shell = 0; shell < max_shells; ++shell) {
    const double hi = 2.0 * lo;
    auto part = integrate_adaptive<V>(f, lo, hi, opts);
    out.value += part.value;
    out.error += part.error;
    out.evaluations += part.evaluations;
    out.converged = out.converged && part.converged;
    const double size = detail::magnitude<V>(part.value);
    const double scale = detail::magnitude<V>(out.value);
    if (size <= std::max(opts.abs_tol, 1e-3 * opts.rel_tol * scale) || size == 0.0) {
      if (++quiet >= 3) return out;
    } else {
      quiet = 0;
    }
    lo = hi;
  }
  fail(ErrorKind::Divergence, "integral over an unbounded range does not settle");
}

/// Tensor Gauss-Legendre nodes/weights on [-1, 1] (5 points).
inline constexpr std::array<double, 5> kGauss5Nodes = {-0.906179845938663992797626878299392, -0.538469310105683091036314420700208,
                                                      0.0, 0.538469310105683091036314420700208,
                                                      0.906179845938663992797626878299392};
inline constexpr std::array<double, 5> kGauss5Weights = {0.236926885056189087514264040719918, 0.478628670499366468041291514835639,
                                                        0.568888888888888888888888888888889, 0.478628670499366468041291514835639,
                                                        0.236926885056189087514264040719918};

}  // namespace pucci
