#include "pucci/kernel_model.hpp"

#include "pucci/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pucci {

const char* to_string(PhiFamily family) {
  switch (family) {
    case PhiFamily::Power: return "power";
    case PhiFamily::LogPower: return "log_power";
    case PhiFamily::Tabulated: return "tabulated";
  }
  return "unknown";
}

const char* to_string(KernelClass c) { return c == KernelClass::A3 ? "A3" : "A4"; }

namespace {

void check_scaling_data(double beta, double kappa0) {
  if (!(beta > 0.0 && beta < 2.0)) fail(ErrorKind::InvalidSpec, "beta must lie in (0, 2)");
  // s = 1 in the upper scaling inequality forces κ∘ ≥ 1.
  if (!(kappa0 >= 1.0) || !std::isfinite(kappa0)) fail(ErrorKind::InvalidSpec, "kappa0 must be a finite value >= 1");
}

constexpr double kProfileTol = 1e-13;

}  // namespace

ScalingFunction ScalingFunction::power(double beta, double kappa0, std::optional<double> exponent) {
  check_scaling_data(beta, kappa0);
  ScalingFunction f;
  f.family_ = PhiFamily::Power;
  f.beta_ = beta;
  f.kappa0_ = kappa0;
  f.exponent_ = exponent.value_or(beta);
  if (!(f.exponent_ > 0.0 && f.exponent_ < 2.0)) fail(ErrorKind::InvalidSpec, "power exponent must lie in (0, 2)");
  return f;
}

ScalingFunction ScalingFunction::log_power(double beta, double kappa0, std::optional<double> exponent) {
  check_scaling_data(beta, kappa0);
  ScalingFunction f;
  f.family_ = PhiFamily::LogPower;
  f.beta_ = beta;
  f.kappa0_ = kappa0;
  f.exponent_ = exponent.value_or(beta);
  if (!(f.exponent_ > 0.0 && f.exponent_ < 2.0)) fail(ErrorKind::InvalidSpec, "log-power exponent must lie in (0, 2)");
  return f;
}

ScalingFunction ScalingFunction::tabulated(double beta, double kappa0, std::vector<double> t, std::vector<double> values) {
  check_scaling_data(beta, kappa0);
  if (t.size() != values.size() || t.size() < 2) fail(ErrorKind::InvalidSpec, "tabulated phi needs at least two (t, value) pairs");
  ScalingFunction f;
  f.family_ = PhiFamily::Tabulated;
  f.beta_ = beta;
  f.kappa0_ = kappa0;
  f.exponent_ = beta;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(t[i]) || !std::isfinite(values[i]))
      fail(ErrorKind::InvalidFunction, "tabulated phi needs positive finite abscissae and values");
    if (i > 0 && !(t[i] > t[i - 1])) fail(ErrorKind::InvalidSpec, "tabulated phi abscissae must increase");
    f.log_t_.push_back(std::log(t[i]));
    f.log_v_.push_back(std::log(values[i]));
  }
  f.table_t_ = std::move(t);
  f.table_v_ = std::move(values);
  return f;
}

double ScalingFunction::raw(double t) const {
  switch (family_) {
    case PhiFamily::Power: return std::pow(t, exponent_);
    case PhiFamily::LogPower: return std::log1p(std::pow(t, exponent_));
    case PhiFamily::Tabulated: {
      const double lt = std::log(t);
      const std::size_t n = log_t_.size();
      std::size_t k = 0;
      if (lt >= log_t_[n - 1]) {
        k = n - 2;
      } else if (lt > log_t_[0]) {
        k = static_cast<std::size_t>(std::upper_bound(log_t_.begin(), log_t_.end(), lt) - log_t_.begin()) - 1;
      }
      const double slope = (log_v_[k + 1] - log_v_[k]) / (log_t_[k + 1] - log_t_[k]);
      return std::exp(log_v_[k] + slope * (lt - log_t_[k]));
    }
  }
  return 0.0;
}

double ScalingFunction::operator()(double t) const { return scale_ * raw(t); }

ScalingFunction ScalingFunction::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) fail(ErrorKind::InvalidSpec, "phi scale factor must be positive");
  ScalingFunction f = *this;
  f.scale_ *= factor;
  return f;
}

namespace {

// ∫_0^∞ g(w) dw for a positive, eventually decaying g.
template <class G>
double half_line(G&& g) {
  QuadOptions opts;
  opts.rel_tol = kProfileTol;
  const auto head = integrate_adaptive<double>(g, 0.0, 1.0, opts);
  const auto rest = integrate_to_infinity<double>(g, 1.0, opts, 80);
  return head.value + rest.value;
}

double dini_numeric(const ScalingFunction& phi, double s) {
  // t = s·e^{-w}
  return half_line([&](double w) { return phi(s * std::exp(-w)); });
}

}  // namespace

double ScalingFunction::dini_partial(double s) const {
  if (!(s > 0.0)) return 0.0;
  if (family_ == PhiFamily::Power) return scale_ * std::pow(s, exponent_) / exponent_;
  return dini_numeric(*this, s);
}

double ScalingFunction::upper_moment(double s) const {
  if (!(s > 0.0)) fail(ErrorKind::Domain, "upper_moment needs s > 0");
  if (family_ == PhiFamily::Power) return scale_ * std::pow(s, exponent_ - 2.0) / (2.0 - exponent_);
  // t = s·e^{w}
  return half_line([&](double w) {
    const double t = s * std::exp(w);
    return (*this)(t) / (t * t);
  });
}

bool ScalingFunction::non_decreasing(int samples) const {
  double prev = (*this)(1e-6);
  for (int k = 1; k < samples; ++k) {
    const double t = std::pow(10.0, -6.0 + 12.0 * k / (samples - 1));
    const double v = (*this)(t);
    if (v < prev * (1.0 - 1e-14)) return false;
    prev = v;
  }
  return true;
}

void KernelSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorKind::InvalidSpec, "lambda must be positive");
  if (!(Lambda >= lambda) || !std::isfinite(Lambda)) fail(ErrorKind::InvalidSpec, "Lambda must satisfy Lambda >= lambda");
  if (!(alpha > phi.beta() && alpha < 2.0)) {
    std::ostringstream msg;
    msg << "alpha must lie in (beta, 2) = (" << phi.beta() << ", 2) for class " << to_string(kernel_class) << " kernels; got "
        << alpha;
    fail(ErrorKind::InvalidSpec, msg.str());
  }
  if (kernel_class == KernelClass::A4 && !phi.non_decreasing())
    fail(ErrorKind::InvalidSpec, "class A4 (two-sided) kernels require a non-decreasing phi");
}

double scale_multiplier(const ScalingFunction& phi, int i, double alpha) {
  if (!(alpha > phi.beta())) fail(ErrorKind::InvalidSpec, "scaled phi needs alpha > beta");
  if (i < 0 || i > 40) fail(ErrorKind::InvalidSpec, "scale index must lie in [0, 40]");
  return phi.kappa0() * std::exp2(-static_cast<double>(i) * (alpha - phi.beta()));
}

ScalingFunction scaled_phi(const ScalingFunction& phi, int i, double alpha) {
  return phi.scaled(scale_multiplier(phi, i, alpha));
}

UpperScalingReport check_upper_scaling(const ScalingFunction& phi, int sample_count) {
  if (sample_count < 10) fail(ErrorKind::Precondition, "check_upper_scaling needs at least 10 samples");
  const auto log_grid = [&](double lo, double hi, int k) {
    return std::pow(10.0, lo + (hi - lo) * k / (sample_count - 1));
  };
  double worst = -kInf;
  for (int a = 0; a < sample_count; ++a) {
    const double t = log_grid(-6.0, 6.0, a);
    const double phi_t = phi(t);
    if (!(phi_t > 0.0) || !std::isfinite(phi_t)) fail(ErrorKind::InvalidFunction, "phi is not positive at a sample");
    for (int b = 0; b < sample_count; ++b) {
      const double s = log_grid(0.0, 4.0, b);
      const double phi_st = phi(s * t);
      if (!(phi_st > 0.0) || !std::isfinite(phi_st)) fail(ErrorKind::InvalidFunction, "phi is not positive at a sample");
      const double ratio = phi_st / (phi.kappa0() * std::pow(s, phi.beta()) * phi_t);
      worst = std::max(worst, ratio - 1.0);
    }
  }
  return {worst, worst <= 1e-12};
}

double dini_integral(const ScalingFunction& phi) {
  const double value = dini_numeric(phi, 1.0);
  if (!std::isfinite(value)) fail(ErrorKind::Divergence, "Dini integral of phi diverges");
  return value;
}

template <int Dim>
KernelFunction<Dim>::KernelFunction(KernelSpec spec, Coefficients c_stable, Coefficients c_phi, bool phi_cutoff)
    : spec_(std::move(spec)), c_stable_(c_stable), c_phi_(c_phi), cutoff_(phi_cutoff) {
  spec_.validate();
  check_bounds(0);
}

template <int Dim>
KernelFunction<Dim> KernelFunction<Dim>::uniform(const KernelSpec& spec, double c_stable, double c_phi, bool phi_cutoff) {
  return KernelFunction(spec, Coefficients::Constant(c_stable), Coefficients::Constant(c_phi), phi_cutoff);
}

template <int Dim>
KernelFunction<Dim> KernelFunction<Dim>::random(const KernelSpec& spec, std::mt19937_64& rng, bool phi_cutoff) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Coefficients cs;
  Coefficients cp;
  const double phi_lo = spec.kernel_class == KernelClass::A4 ? spec.lambda : 0.0;
  for (int k = 0; k < kPairs; ++k) {
    cs[k] = spec.lambda + (spec.Lambda - spec.lambda) * unit(rng);
    cp[k] = phi_lo + (spec.Lambda - phi_lo) * unit(rng);
  }
  return KernelFunction(spec, cs, cp, phi_cutoff);
}

template <int Dim>
int KernelFunction<Dim>::sector_pair(const Point<Dim>& y) {
  if constexpr (Dim == 1) {
    return 0;
  } else {
    double theta = std::atan2(y[1], y[0]);
    if (theta < 0.0) theta += kPi;
    if (theta >= kPi) theta -= kPi;
    const int s = static_cast<int>(std::floor(theta / (kPi / kPairs)));
    return std::clamp(s, 0, kPairs - 1);
  }
}

template <int Dim>
double KernelFunction<Dim>::operator()(const Point<Dim>& y) const {
  const double r = y.norm();
  if (!(r > 0.0)) fail(ErrorKind::SingularPoint, "kernel evaluated at y = 0");
  const int s = sector_pair(y);
  const double stable = c_stable_[s] * (2.0 - spec_.alpha) * std::pow(r, -spec_.alpha);
  const double lower = (cutoff_ && r < 1.0) ? 0.0 : c_phi_[s] * spec_.phi(1.0 / r);
  return stable + lower;
}

template <int Dim>
void KernelFunction<Dim>::check_bounds(int samples) const {
  const double lam = spec_.lambda;
  const double Lam = spec_.Lambda;
  const bool two_sided = spec_.kernel_class == KernelClass::A4;
  if (two_sided && cutoff_) fail(ErrorKind::ClassMismatch, "class A4 kernels cannot truncate the phi part");
  for (int k = 0; k < kPairs; ++k) {
    if (!(c_stable_[k] >= lam && c_stable_[k] <= Lam))
      fail(ErrorKind::ClassMismatch, "stable sector coefficient outside [lambda, Lambda]");
    const double lo = two_sided ? lam : 0.0;
    if (!(c_phi_[k] >= lo && c_phi_[k] <= Lam)) fail(ErrorKind::ClassMismatch, "phi sector coefficient outside its class range");
  }
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> logr(-4.0, 4.0);
  for (int n = 0; n < samples; ++n) {
    Point<Dim> y;
    const double r = std::pow(10.0, logr(rng));
    if constexpr (Dim == 1) {
      y[0] = (n % 2 == 0) ? r : -r;
    } else {
      const double a = angle(rng);
      y << r * std::cos(a), r * std::sin(a);
    }
    const double value = (*this)(y);
    const double stable = (2.0 - spec_.alpha) * std::pow(r, -spec_.alpha);
    const double lower = spec_.phi(1.0 / r);
    const double upper_bound = Lam * (stable + lower);
    const double lower_bound = two_sided ? lam * (stable + lower) : lam * stable;
    if (value > upper_bound * (1.0 + 1e-12) || value < lower_bound * (1.0 - 1e-12))
      fail(ErrorKind::ClassMismatch, "kernel leaves the class bounds at a sampled point");
    Point<Dim> minus_y = -y;
    if (std::abs((*this)(minus_y) - value) > 1e-14 * std::abs(value))
      fail(ErrorKind::ClassMismatch, "kernel is not symmetric");
  }
}

template class KernelFunction<1>;
template class KernelFunction<2>;

}  // namespace pucci
