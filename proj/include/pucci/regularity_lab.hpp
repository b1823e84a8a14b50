#pragma once

// Measurements on solver output: weighted tail norms, oscillation decay
// (Hölder exponent), superlevel-set tails (weak Harnack), Harnack quotients
// and boundary Harnack ratios, plus the sweep driver.

#include "pucci/solver.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace pucci {

/// ∫|u|/(1+|y|^{d+α}) dy + ∫|u|/(1+|y|^d/φ(1/|y|)) dy. Grid part by cellwise
/// quadrature of the interpolant, exterior part by radial/angular quadrature.
template <int Dim>
double weighted_tail_norm(const GridFunction<Dim>& u, const KernelSpec& spec);

struct HolderReport {
  double gamma_hat = 0.0;   // clamped to [0, 1]
  double gamma_raw = 0.0;   // unclamped slope
  double fit_residual = 0.0;  // largest |log osc - fit|
  double C_hat = 1.0;       // 8^gamma_hat
  std::vector<int> levels;
  std::vector<double> radii;
  std::vector<double> oscillations;
};

/// Fits log osc(B_{8^-k}(x0)) against k log 8 over k = 0..k_max, using radii
/// spanning at least 4 grid cells. x0 must be a grid node.
template <int Dim>
HolderReport oscillation_decay(const GridFunction<Dim>& u, const Point<Dim>& x0, int k_max);

struct TailFit {
  double C_fit = 0.0;
  double eps_fit = 0.0;
  double r = 0.0;
  double ball_measure = 0.0;
  std::vector<double> thresholds;
  std::vector<double> measures;
  std::vector<char> in_fit;   // thresholds used by the regression
  bool bound_holds = false;   // C_fit t^-eps ≥ measure at every threshold
};

/// Cell-counting measure h^d·#{nodes in B_r with u ≥ t} for each t.
template <int Dim>
std::vector<double> level_set_measures(const GridFunction<Dim>& u, double r, const std::vector<double>& thresholds);

/// Regression of log measure on log t over the thresholds where the measure is
/// strictly between 0 and |B_r|; C_fit is the least constant for which
/// C t^-eps majorizes the measure on that range. `bound_holds` then checks all thresholds.
template <int Dim>
TailFit weak_harnack_tail(const GridFunction<Dim>& u, double r, double C0, const std::vector<double>& thresholds);

struct HarnackReport {
  double sup_val = 0.0;
  double inf_val = 0.0;
  double center_value = 0.0;
  double normalization = 0.0;  // u(0) + C0
  double quotient = 0.0;
};

/// sup_{B_{1/2}} u / (u(0) + C0) over grid nodes.
template <int Dim>
HarnackReport harnack_quotient(const GridFunction<Dim>& u, double C0);

struct BoundaryHarnackReport {
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  double norm_u1 = 0.0;  // weighted tail norm before normalization
  double norm_u2 = 0.0;
  double floor = 0.0;
  int points = 0;
};

template <int Dim>
struct BoundaryHarnackSetup {
  std::function<bool(const Point<Dim>&)> domain;
  Point<Dim> x0 = Point<Dim>::Zero();
  double rho = 0.0;
  double eval_radius = 0.5;
  double floor_ratio = 1e-8;
};

/// Ratio bounds of u1/u2 on B_{eval_radius} after normalizing both to unit
/// weighted tail norm. Checks that both vanish on B_1 \ Ω and B_{2ρ}(x0) ⊂ Ω ∩ B_{1/2}.
template <int Dim>
BoundaryHarnackReport boundary_harnack(const GridFunction<Dim>& u1, const GridFunction<Dim>& u2, const KernelSpec& spec,
                                       const BoundaryHarnackSetup<Dim>& setup);

// ---- sweep driver -------------------------------------------------------

enum class MeasurementKind { Holder, WeakHarnack, Harnack, BoundaryHarnack };
enum class HarnackData { Annulus, Constant };

const char* to_string(MeasurementKind kind);

/// φ family by name: "power" is t^{α/2}, "log" is log(1 + t^{α/2}).
ScalingFunction phi_family(const std::string& name, double alpha);

struct ExperimentConfig {
  double lambda = 1.0;
  double Lambda = 2.0;
  std::vector<double> alphas = {1.5};
  std::vector<std::string> phi_families = {"power"};
  int cells = 512;      // d = 1 problems
  int cells_2d = 64;    // boundary Harnack (d = 2)
  int cells_holder = 4096;  // four radii 8^-k must span 4 cells
  std::vector<MeasurementKind> measurements;
  std::vector<double> tail_radii = {0.25, 0.5};
  HarnackData harnack_data = HarnackData::Annulus;
  std::uint64_t seed = 0;
};

/// One row of the combined report; fields that do not apply are NaN.
struct ExperimentRecord {
  std::string measurement;
  double alpha = 0.0;
  std::string phi_family;
  double radius = 0.0;
  double quotient = std::numeric_limits<double>::quiet_NaN();
  double gamma_hat = std::numeric_limits<double>::quiet_NaN();
  double eps_fit = std::numeric_limits<double>::quiet_NaN();
  double ratio_min = std::numeric_limits<double>::quiet_NaN();
  double ratio_max = std::numeric_limits<double>::quiet_NaN();
  double residual = 0.0;
  int cells = 0;
  bool pass = false;
  std::string note;
};

struct RegularityBundle {
  std::vector<ExperimentRecord> records;
};

/// Problem families used by the sweep (all on Ω = B_1, box [-1, 1]^d):
///  Holder:          M⁺u = f with f = M⁺u* and g = u* for u* = min(|x|^γ, 2^γ), x0 = 0.
///  WeakHarnack:     M⁻u = -1, g = 0, C0 = 1.
///  Harnack:         A4 linear kernel with coefficients (λ+Λ)/2, f = 0, g = 1_{1<|x|<2} (or g ≡ 1).
///  BoundaryHarnack: d = 2, Ω = B_1 ∩ {x₁ > 0}, one linear kernel, two exterior bumps.
RegularityBundle run_experiment(const ExperimentConfig& config);

/// Exponent of the manufactured Hölder solution: (1+α)/2 for α < 1 and
/// (2+α)/2 otherwise. It exceeds α, which keeps M⁺u* bounded near 0.
double holder_exponent(double alpha);

/// u*(x) = min(|x|^γ, 2^γ) with γ = holder_exponent(α).
FieldFunction<1> holder_profile(double alpha);

/// The d = 1 problem behind a measurement (not BoundaryHarnack).
DirichletProblem<1> lab_problem(MeasurementKind kind, const KernelSpec& spec, int cells,
                                HarnackData data = HarnackData::Annulus);

/// The boundary Harnack problem pair at a given resolution (exposed for refinement studies).
struct BoundaryHarnackRun {
  BoundaryHarnackReport report;
  double residual = 0.0;
};
BoundaryHarnackRun boundary_harnack_experiment(const KernelSpec& spec, int cells, double eval_radius = 0.5);

}  // namespace pucci
