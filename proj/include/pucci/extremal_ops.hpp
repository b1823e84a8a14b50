#pragma once

// Extremal Pucci operators M±, their scaled versions M_i±, the two-sided
// (tilde) operators and linear operators of the class, on grid functions and
// on closed-form fields.

#include "pucci/quadrature.hpp"

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pucci {

enum class OperatorVariant { Plus, Minus, ScaledPlus, ScaledMinus, TildePlus, TildeMinus, Linear };

/// Which operator to apply. Plus/Minus carry the profile φ itself; the scaled
/// variants carry φ_i = κ∘ 2^{-i(α-β)} φ, so ScaledPlus(0) equals Plus only
/// when κ∘ = 1.
template <int Dim>
struct OperatorKind {
  OperatorVariant variant = OperatorVariant::Plus;
  int scale = 0;
  std::optional<KernelFunction<Dim>> kernel;

  static OperatorKind plus() { return {OperatorVariant::Plus, 0, std::nullopt}; }
  static OperatorKind minus() { return {OperatorVariant::Minus, 0, std::nullopt}; }
  static OperatorKind mplus(int i) { return {OperatorVariant::ScaledPlus, i, std::nullopt}; }
  static OperatorKind mminus(int i) { return {OperatorVariant::ScaledMinus, i, std::nullopt}; }
  static OperatorKind tilde_plus() { return {OperatorVariant::TildePlus, 0, std::nullopt}; }
  static OperatorKind tilde_minus() { return {OperatorVariant::TildeMinus, 0, std::nullopt}; }
  static OperatorKind linear(KernelFunction<Dim> k) { return {OperatorVariant::Linear, 0, std::move(k)}; }

  std::string name() const;
};

struct OperatorEvaluation {
  double value = 0.0;
  double near_field = 0.0;
  double mid_field = 0.0;
  double tail = 0.0;
  double tail_error_bound = 0.0;
  double quadrature_error = 0.0;

  double error_budget() const { return tail_error_bound + quadrature_error; }
};

/// Sign rule realizing `kind` for the class `spec`. Throws ClassMismatch for
/// tilde operators on A3 data or a linear kernel from another class.
template <int Dim>
SignRule<Dim> sign_rule(const OperatorKind<Dim>& kind, const KernelSpec& spec);

/// Grid-route evaluator. Weight tables are built on first use and cached per
/// block size; evaluation is thread-safe.
template <int Dim>
class ExtremalEvaluator {
 public:
  ExtremalEvaluator(KernelSpec spec, GridGeometry<Dim> geometry);

  OperatorEvaluation evaluate(const OperatorKind<Dim>& kind, const GridFunction<Dim>& u, const Index<Dim>& x) const;
  LevyTerms terms(const SignRule<Dim>& rule, const GridFunction<Dim>& u, const Index<Dim>& x) const;

  struct Tables {
    CellWeights<Dim> stable;
    CellWeights<Dim> phi;
  };
  /// Tables with at least the given half-width; `cutoff` selects the truncated φ table.
  const Tables& tables(double half_width, bool cutoff) const;

  const KernelSpec& spec() const { return spec_; }
  const GridGeometry<Dim>& geometry() const { return geometry_; }
  const RadialWeight& stable_weight() const { return stable_; }
  const RadialWeight& phi_weight(bool cutoff) const { return cutoff ? phi_cut_ : phi_; }

 private:
  KernelSpec spec_;
  GridGeometry<Dim> geometry_;
  RadialWeight stable_;
  RadialWeight phi_;
  RadialWeight phi_cut_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, bool>, std::unique_ptr<Tables>> cache_;
};

/// One-shot grid evaluation at node x (builds its own weight tables).
template <int Dim>
OperatorEvaluation eval_operator(const OperatorKind<Dim>& kind, const KernelSpec& spec, const GridFunction<Dim>& u,
                                 const Index<Dim>& x);

/// Grid-free evaluation for a closed-form field at an arbitrary point. The
/// ball |y| < h is Taylor-matched with the discrete Laplacian at step h; the
/// rest is adaptive quadrature plus a closed-form tail beyond the far radius.
template <int Dim>
OperatorEvaluation eval_operator_field(const OperatorKind<Dim>& kind, const KernelSpec& spec, const FieldFunction<Dim>& f,
                                       const Point<Dim>& x, double h, double rel_tol = 1e-10);

struct OrderingReport {
  double max_violation = 0.0;  // largest (left - right - budget) over all links and points
  double max_gap = 0.0;        // largest raw (left - right)
  bool pass = true;
  std::vector<std::array<double, 4>> values;  // M⁻, M̃⁻, M̃⁺, M⁺ per point
};

/// Checks M⁻u ≤ M̃⁻u ≤ M̃⁺u ≤ M⁺u at each point (A4 data required).
template <int Dim>
OrderingReport operator_ordering_check(const KernelSpec& spec, const GridFunction<Dim>& u, const std::vector<Index<Dim>>& points);

/// v(y) = u(x0 + 2^{-i} y)/amplitude on a grid of spacing 2^i h. x0 must be a node of u.
template <int Dim>
GridFunction<Dim> rescale_function(const GridFunction<Dim>& u, const Point<Dim>& x0, int i, double amplitude);

/// Maps a node of the rescaled grid back to the matching node of u.
template <int Dim>
Index<Dim> rescaled_node_origin(const GridFunction<Dim>& u, const Point<Dim>& x0, const GridFunction<Dim>& v, const Index<Dim>& y);

struct ScalingReport {
  double max_violation = 0.0;  // largest (rhs - lhs - budget)
  double min_margin = kInf;    // smallest (lhs - rhs)
  bool pass = true;
  std::vector<std::array<double, 3>> values;  // lhs, rhs, budget
};

/// Checks 2^{-iα}/amplitude · M⁻u(x̂) ≥ M_i⁻ v(x) at nodes x of the rescaled grid.
template <int Dim>
ScalingReport scaling_inequality_check(const GridFunction<Dim>& u, const Point<Dim>& x0, int i, double amplitude,
                                       const KernelSpec& spec, const std::vector<Index<Dim>>& points);

/// Closed-form view of a grid function (interpolated inside the box).
template <int Dim>
FieldFunction<Dim> as_field(const GridFunction<Dim>& u);

}  // namespace pucci
