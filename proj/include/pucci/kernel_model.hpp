#pragma once

// Lower-order profiles φ, the ellipticity class (λ, Λ, α, φ, A3/A4), and
// concrete symmetric kernels inside the class.

#include "pucci/core.hpp"

#include <optional>
#include <random>
#include <vector>

namespace pucci {

enum class PhiFamily { Power, LogPower, Tabulated };

const char* to_string(PhiFamily family);

/// Lower-order profile φ : (0, ∞) → (0, ∞).
///
/// Power:     φ(t) = c·t^e
/// LogPower:  φ(t) = c·log(1 + t^e)
/// Tabulated: log-log linear interpolation of (t_k, φ_k), extended with the
///            end slopes.
///
/// `beta` and `kappa0` are the declared upper-scaling data; `exponent` e
/// defaults to beta but may differ (a mis-declared β is a legal object that
/// simply fails check_upper_scaling). c is `scale_factor`.
class ScalingFunction {
 public:
  static ScalingFunction power(double beta, double kappa0 = 1.0, std::optional<double> exponent = std::nullopt);
  static ScalingFunction log_power(double beta, double kappa0 = 1.0, std::optional<double> exponent = std::nullopt);
  static ScalingFunction tabulated(double beta, double kappa0, std::vector<double> t, std::vector<double> values);

  double operator()(double t) const;

  /// ∫_0^s φ(t)/t dt (closed form for Power, quadrature otherwise).
  double dini_partial(double s) const;
  /// ∫_s^∞ φ(t)/t^3 dt.
  double upper_moment(double s) const;

  /// Same profile multiplied by `factor`.
  ScalingFunction scaled(double factor) const;

  /// True when φ is non-decreasing on a log grid over [1e-6, 1e6].
  bool non_decreasing(int samples = 400) const;

  PhiFamily family() const { return family_; }
  double beta() const { return beta_; }
  double kappa0() const { return kappa0_; }
  double exponent() const { return exponent_; }
  double scale_factor() const { return scale_; }
  const std::vector<double>& table_t() const { return table_t_; }
  const std::vector<double>& table_values() const { return table_v_; }

 private:
  ScalingFunction() = default;
  double raw(double t) const;

  PhiFamily family_ = PhiFamily::Power;
  double beta_ = 0.5;
  double kappa0_ = 1.0;
  double exponent_ = 0.5;
  double scale_ = 1.0;
  std::vector<double> table_t_;
  std::vector<double> table_v_;
  std::vector<double> log_t_;
  std::vector<double> log_v_;
};

enum class KernelClass { A3, A4 };

const char* to_string(KernelClass c);

/// Ellipticity class data.
struct KernelSpec {
  double lambda = 1.0;
  double Lambda = 1.0;
  double alpha = 1.0;
  ScalingFunction phi = ScalingFunction::power(0.5);
  KernelClass kernel_class = KernelClass::A3;

  /// Throws InvalidSpec when 0 < λ ≤ Λ, β < α < 2 or (for A4) monotonicity of φ fails.
  void validate() const;
  KernelSpec with_alpha(double a) const {
    KernelSpec s = *this;
    s.alpha = a;
    return s;
  }
};

/// φ_i = κ∘ 2^{-i(α-β)} φ. Throws InvalidSpec for α ≤ β, i < 0 or i > 40.
ScalingFunction scaled_phi(const ScalingFunction& phi, int i, double alpha);

/// Multiplier κ∘ 2^{-i(α-β)} used by scaled_phi.
double scale_multiplier(const ScalingFunction& phi, int i, double alpha);

struct UpperScalingReport {
  double max_violation = 0.0;
  bool pass = false;
};

/// Samples φ(st) / (κ∘ s^β φ(t)) - 1 over s ∈ [1, 1e4], t ∈ [1e-6, 1e6].
UpperScalingReport check_upper_scaling(const ScalingFunction& phi, int sample_count);

/// ∫_0^1 φ(y)/y dy by adaptive quadrature (relative error ≤ 1e-8).
double dini_integral(const ScalingFunction& phi);

/// Symmetric kernel k(y) = c_s(ŷ)(2-α)|y|^{-α} + c_φ(ŷ) φ(1/|y|) [· 1_{|y|≥1}]
/// with coefficients constant on angular sectors (2 in d = 1, 16 in d = 2;
/// antipodal sectors share a coefficient, so only half are stored).
template <int Dim>
class KernelFunction {
 public:
  static constexpr int kSectors = Dim == 1 ? 2 : 16;
  static constexpr int kPairs = kSectors / 2;
  using Coefficients = Eigen::Array<double, kPairs, 1>;

  KernelFunction(KernelSpec spec, Coefficients c_stable, Coefficients c_phi, bool phi_cutoff = false);

  static KernelFunction uniform(const KernelSpec& spec, double c_stable, double c_phi, bool phi_cutoff = false);
  /// Random sector coefficients inside the class bounds.
  static KernelFunction random(const KernelSpec& spec, std::mt19937_64& rng, bool phi_cutoff = false);

  /// Antipodal pair index of the sector containing direction y (y ≠ 0).
  static int sector_pair(const Point<Dim>& y);

  /// The factor multiplying |y|^{-d}. Throws SingularPoint at y = 0.
  double operator()(const Point<Dim>& y) const;

  const KernelSpec& spec() const { return spec_; }
  const Coefficients& c_stable() const { return c_stable_; }
  const Coefficients& c_phi() const { return c_phi_; }
  bool phi_cutoff() const { return cutoff_; }

  /// Throws ClassMismatch when coefficients or sampled values leave the class bounds.
  void check_bounds(int samples = 200) const;

 private:
  KernelSpec spec_;
  Coefficients c_stable_;
  Coefficients c_phi_;
  bool cutoff_;
};

template <int Dim>
double kernel_eval(const KernelFunction<Dim>& k, const Point<Dim>& y) {
  return k(y);
}

}  // namespace pucci
