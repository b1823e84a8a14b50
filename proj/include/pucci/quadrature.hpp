#pragma once

// Discretization of Lévy integrals ∫ δ(u,x,y) w(|y|)/|y|^d dy on a uniform
// lattice: exact cell weights, a Taylor-matched inner cell, and a closed-form
// (or adaptive) far-field closure.

#include "pucci/grid.hpp"
#include "pucci/kernel_model.hpp"

#include <optional>
#include <vector>

namespace pucci {

enum class RadialKind { Stable, Phi };

/// Radial profile w(ρ): Stable is (2-α)ρ^{-α}, Phi is φ(1/ρ); both carry a
/// prefactor. With `cutoff` the Phi profile vanishes on ρ < 1.
class RadialWeight {
 public:
  static RadialWeight stable(double alpha, double prefactor = 1.0);
  static RadialWeight phi(ScalingFunction phi, double prefactor = 1.0, bool cutoff = false);

  double density(double rho) const;
  /// G(r) = ∫_r^∞ w(ρ)/ρ dρ.
  double tail_integral(double r) const;
  /// H(r) = ∫_0^r ρ w(ρ) dρ.
  double second_moment(double r) const;
  /// (∫ w/ρ, ∫ ρw) over [lo, hi], closed form when available.
  Eigen::Array2d interval(double lo, double hi) const;
  /// True when G and H are available in closed form.
  bool closed_form() const;

  RadialKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double prefactor() const { return prefactor_; }
  bool cutoff() const { return cutoff_; }
  const std::optional<ScalingFunction>& profile() const { return phi_; }

 private:
  RadialWeight() = default;
  double g_raw(double r) const;
  double h_raw(double r) const;

  RadialKind kind_ = RadialKind::Stable;
  double alpha_ = 1.0;
  double prefactor_ = 1.0;
  bool cutoff_ = false;
  std::optional<ScalingFunction> phi_;
};

template <int Dim>
inline constexpr int kSectorPairs = Dim == 1 ? 1 : 8;

template <int Dim>
using PairArray = Eigen::Array<double, kSectorPairs<Dim>, 1>;

/// Lattice weights for one radial profile. Offsets form a half-set (y and -y
/// are represented once) of the block |j|_∞ ≤ M; the cell of offset j is the
/// unit cell centred at jh clipped to |y| ≥ h.
template <int Dim>
struct CellWeights {
  double spacing = 0.0;
  int block = 0;             // M
  double half_width = 0.0;   // (M + 1/2) h, the tail starts outside [-a, a]^d
  std::vector<Index<Dim>> offsets;
  std::vector<int> pair;         // sector pair of the cell centre
  std::vector<double> weights;   // ∫_cell w/|y|^d
  std::vector<double> moments;   // ∫_cell |y|² w/|y|^d
  double inner_coeff = 0.0;      // ½·(1/d)·∫_{|y|<h} |y|² w/|y|^d
  double moment_correction = 0.0;
  PairArray<Dim> tail_mass = PairArray<Dim>::Zero();  // ∫ over the tail, per sector pair
  double relative_error = 0.0;   // largest relative quadrature error of a weight

  /// Coefficient of the nearest-neighbour Laplacian term, clamped at 0.
  double inner_effective() const { return std::max(0.0, inner_coeff + moment_correction); }
  double tail_total() const { return tail_mass.sum(); }
};

/// Builds the weight table. `tail_radius` is the least block half-width.
template <int Dim>
CellWeights<Dim> precompute_weights(const GridGeometry<Dim>& geometry, const RadialWeight& w, double tail_radius);

/// Coefficients applied to δ⁺ and δ⁻ per sector pair, for the stable and φ
/// parts. A δ-term contributes c_pos·δ when δ ≥ 0 and c_neg·δ otherwise.
template <int Dim>
struct SignRule {
  PairArray<Dim> stable_pos = PairArray<Dim>::Zero();
  PairArray<Dim> stable_neg = PairArray<Dim>::Zero();
  PairArray<Dim> phi_pos = PairArray<Dim>::Zero();
  PairArray<Dim> phi_neg = PairArray<Dim>::Zero();
  bool phi_cutoff = false;

  static SignRule constant(double s_pos, double s_neg, double p_pos, double p_neg);
  static SignRule linear(const KernelFunction<Dim>& k);

  /// (c_stable, c_phi) for a pair; pair < 0 gives the angular mean.
  Eigen::Array2d coef(int pair, bool positive) const {
    if (pair < 0) {
      return positive ? Eigen::Array2d(stable_pos.mean(), phi_pos.mean()) : Eigen::Array2d(stable_neg.mean(), phi_neg.mean());
    }
    return positive ? Eigen::Array2d(stable_pos[pair], phi_pos[pair]) : Eigen::Array2d(stable_neg[pair], phi_neg[pair]);
  }
  /// True when the coefficients do not depend on the sign of δ.
  bool is_linear() const {
    return (stable_pos == stable_neg).all() && (phi_pos == phi_neg).all();
  }
};

/// Tail closure linearized at the centre value u0: tail = constant - diagonal·u0.
struct TailTerms {
  double constant = 0.0;
  double diagonal = 0.0;
  double error = 0.0;
  double value(double u0) const { return constant - diagonal * u0; }
};

struct LevyTerms {
  double near = 0.0;
  double mid = 0.0;
  double tail = 0.0;
  double tail_error = 0.0;
  double quadrature_error = 0.0;
  double value() const { return near + mid + tail; }
};

/// Far-field contribution at node x for the sign rule; `ws`/`wp` give the block size and tail masses.
template <int Dim>
TailTerms tail_contribution(const GridFunction<Dim>& u, const Index<Dim>& x, const CellWeights<Dim>& ws,
                            const CellWeights<Dim>& wp, const RadialWeight& rs, const RadialWeight& rp,
                            const SignRule<Dim>& rule);

/// Full discrete Lévy sum at node x.
template <int Dim>
LevyTerms apply_levy(const GridFunction<Dim>& u, const Index<Dim>& x, const CellWeights<Dim>& ws, const CellWeights<Dim>& wp,
                     const RadialWeight& rs, const RadialWeight& rp, const SignRule<Dim>& rule);

/// Least block half-width for which the closed-form tail is exact for u's exterior.
template <int Dim>
double required_half_width(const GridGeometry<Dim>& geometry, const Exterior<Dim>& exterior);

}  // namespace pucci
