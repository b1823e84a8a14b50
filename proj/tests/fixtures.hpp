#pragma once

// Shared problem data for unit and acceptance tests.

#include "pucci/extremal_ops.hpp"

#include <random>
#include <vector>

namespace fixtures {

using namespace pucci;

inline KernelSpec spec(double alpha, bool log_phi = false, KernelClass cls = KernelClass::A3) {
  KernelSpec s;
  s.lambda = 1.0;
  s.Lambda = 2.0;
  s.alpha = alpha;
  s.phi = log_phi ? ScalingFunction::log_power(0.5 * alpha) : ScalingFunction::power(0.5 * alpha);
  s.kernel_class = cls;
  return s;
}

/// Sum of two smooth bumps a·(1 - |x-c|²/ρ²)²₊ with random amplitude, centre and radius.
inline FieldFunction<1> random_bump(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-2.0, 2.0), ctr(-0.8, 0.8), rad(0.2, 1.0);
  struct B {
    double a, c, r;
  };
  const B b1{amp(rng), ctr(rng), rad(rng)}, b2{amp(rng), ctr(rng), rad(rng)};
  FieldFunction<1> f;
  f.value = [b1, b2](const Point<1>& z) {
    double s = 0.0;
    for (const B& b : {b1, b2}) {
      const double t = 1.0 - (z[0] - b.c) * (z[0] - b.c) / (b.r * b.r);
      if (t > 0.0) s += b.a * t * t;
    }
    return s;
  };
  f.far_radius = std::max(std::abs(b1.c) + b1.r, std::abs(b2.c) + b2.r);
  f.far_value = 0.0;
  f.sup_bound = std::abs(b1.a) + std::abs(b2.a);
  return f;
}

/// Every `stride`-th node with |x| ≤ limit.
template <int Dim>
std::vector<Index<Dim>> nodes_within(const GridGeometry<Dim>& geo, double limit, int stride) {
  std::vector<Index<Dim>> out;
  for (Eigen::Index k = 0; k < geo.size(); ++k) {
    const Index<Dim> m = geo.multi(k);
    bool on_stride = true;
    for (int d = 0; d < Dim; ++d) on_stride = on_stride && (m[d] - geo.cells / 2) % stride == 0;
    if (on_stride && geo.coord(m).template lpNorm<Eigen::Infinity>() <= limit) out.push_back(m);
  }
  return out;
}

}  // namespace fixtures
