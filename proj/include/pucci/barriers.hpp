#pragma once

// The radial barrier f(x) = min{δ^{-p}, max{|x|^{-p}, (2√n)^{-p}}}, numerical
// certification of M₀⁻f ≥ 0 on r < |x| ≤ 2√n, the (p, δ) search and the
// compactly supported bump built from it.

#include "pucci/extremal_ops.hpp"

#include <array>
#include <vector>

namespace pucci {

struct BarrierParams {
  double p = 2.0;
  double delta = 1.0 / 32.0;
  double r = 1.0;
  int n = 1;
  std::array<double, 2> alpha_range = {1.0, 1.0};

  /// Outer radius 2√n.
  double outer() const;
  /// Throws Precondition unless p > n, δ < r/16, r ∈ (0, 1] and the α range lies in (0, 2).
  void validate() const;
};

/// Radial profile min{δ^{-p}, max{ρ^{-p}, R^{-p}}} for a general outer radius R.
double barrier_profile(double p, double delta, double outer, double rho);

double barrier_eval(const BarrierParams& params, double norm_x);

template <int Dim>
double barrier_eval(const BarrierParams& params, const Point<Dim>& x) {
  return barrier_eval(params, x.norm());
}

/// The barrier as a closed-form field (constant beyond 2√n).
template <int Dim>
FieldFunction<Dim> barrier_field(const BarrierParams& params);

/// Test points in r < |x| ≤ 2√n: radial spacing h next to r, growing by 1.25.
/// In d = 2 each radius is sampled at angles 0, π/6 and π/4.
template <int Dim>
std::vector<Point<Dim>> annulus_points(double inner, double outer, double h);

struct BarrierCertificate {
  BarrierParams params;
  double alpha = 0.0;
  double resolution = 0.0;
  double grid_min = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<std::vector<double>> points;
  std::vector<double> values;
  std::vector<double> budgets;
};

/// Evaluates M₀⁻f at every annulus point with near-field radius h ≤ δ/8.
/// Passes iff every value is ≥ -(its error budget).
template <int Dim>
BarrierCertificate verify_barrier(const BarrierParams& params, const KernelSpec& spec, double h);

struct SearchOptions {
  int max_p_steps = 8;
  int max_delta_steps = 6;
  double resolution_ratio = 16.0;  // h = δ / ratio
};

/// First (p, δ) on the lattice p ∈ {n+1, n+2, 2n+2, 4n+4, ...}, δ ∈ {r/32, r/64, ...}
/// certified at α₀, (α₀+α₁)/2 and α₁.
template <int Dim>
BarrierParams search_barrier_params(double r, const KernelSpec& spec, std::array<double, 2> alpha_range,
                                    const SearchOptions& options = {});

/// C_p = p(1 + ½(p+2)(p+4)).
double cp_constant(double p);

template <int Dim>
struct BumpResult {
  GridFunction<Dim> grid;
  FieldFunction<Dim> field;
  double amplitude = 0.0;
  double q3_min = 0.0;
  std::vector<int> scales;
  std::vector<BarrierCertificate> certificates;  // one per scale, over |x| > 1/4
  bool pass = false;
};

/// Φ = a·(F − (2√n)^{-p}) where F is the barrier with a C¹ quadratic cap inside
/// B_δ; a is chosen so that Φ > 2 on the cube of side 3. Certifies
/// M_i⁻Φ ≥ -budget on |x| > 1/4 for every i in `scales`.
template <int Dim>
BumpResult<Dim> build_bump(const BarrierParams& params, const KernelSpec& spec, const std::vector<int>& scales,
                           int grid_cells = 96);

}  // namespace pucci
