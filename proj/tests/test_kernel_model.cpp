#include "oracle.hpp"
#include "pucci/kernel_model.hpp"

#include <doctest.h>

#include <random>

using namespace pucci;

TEST_CASE("power phi has Dini integral 1/beta") {
  for (double beta : {0.1, 0.3, 0.5, 0.75, 0.9, 1.4}) {
    const auto phi = ScalingFunction::power(beta);
    CHECK(dini_integral(phi) == doctest::Approx(1.0 / beta).epsilon(1e-8));
  }
}

TEST_CASE("log-power Dini integral matches Boost quadrature") {
  for (double beta : {0.3, 0.7, 1.2}) {
    const auto phi = ScalingFunction::log_power(beta);
    const double ref = oracle::ts([&](double y) { return std::log1p(std::pow(y, beta)) / y; }, 0.0, 1.0);
    CHECK(dini_integral(phi) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("upper moment matches Boost quadrature") {
  for (const auto& phi : {ScalingFunction::power(0.4), ScalingFunction::log_power(0.8)}) {
    for (double s : {0.05, 1.0, 7.0}) {
      const double ref = oracle::es([&](double t) { return phi(t) / (t * t * t); }, s);
      CHECK(phi.upper_moment(s) == doctest::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("Dini integral is linear under scaling") {
  for (const auto& phi : {ScalingFunction::power(0.5, 1.5), ScalingFunction::log_power(0.6, 2.0)}) {
    const double base = dini_integral(phi);
    for (int i : {0, 1, 4, 17, 40}) {
      const double alpha = 1.3;
      const double expected = phi.kappa0() * std::pow(2.0, -i * (alpha - phi.beta())) * base;
      CHECK(dini_integral(scaled_phi(phi, i, alpha)) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("scaled_phi rejects out-of-range indices") {
  const auto phi = ScalingFunction::power(0.5);
  CHECK_THROWS_AS(scaled_phi(phi, 41, 1.0), Error);
  CHECK_THROWS_AS(scaled_phi(phi, -1, 1.0), Error);
  CHECK_THROWS_AS(scaled_phi(phi, 2, 0.4), Error);
}

TEST_CASE("upper scaling holds for shipped families and fails when beta is mis-declared") {
  for (double alpha : {0.6, 1.0, 1.5, 1.8}) {
    CHECK(check_upper_scaling(ScalingFunction::power(0.5 * alpha), 60).pass);
    CHECK(check_upper_scaling(ScalingFunction::log_power(0.5 * alpha), 60).pass);
  }
  const auto wrong = ScalingFunction::power(0.5, 1.0, 0.9);
  const auto rep = check_upper_scaling(wrong, 60);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_violation > 0.0);
}

TEST_CASE("tabulated phi interpolates log-linearly") {
  const auto phi = ScalingFunction::tabulated(0.5, 1.0, {1.0, 4.0, 16.0}, {1.0, 2.0, 4.0});
  CHECK(phi(2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(phi(64.0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(phi(0.25) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("spec validation messages") {
  KernelSpec s;
  s.lambda = 1.0;
  s.Lambda = 2.0;
  s.phi = ScalingFunction::power(0.5);
  s.alpha = 2.5;
  try {
    s.validate();
    FAIL("alpha = 2.5 accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("alpha must lie in (beta, 2)") != std::string::npos);
    CHECK(std::string(e.what()).find("A3") != std::string::npos);
  }
  s.alpha = 1.5;
  s.kernel_class = KernelClass::A4;
  s.phi = ScalingFunction::tabulated(0.5, 1.0, {1.0, 2.0, 4.0}, {1.0, 0.5, 2.0});
  try {
    s.validate();
    FAIL("non-monotone phi accepted for A4");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("non-decreasing") != std::string::npos);
  }
  s.phi = ScalingFunction::power(0.5);
  s.Lambda = 0.5;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("random kernels respect the class bounds") {
  std::mt19937_64 rng(7);
  for (auto cls : {KernelClass::A3, KernelClass::A4}) {
    KernelSpec s;
    s.lambda = 1.0;
    s.Lambda = 2.0;
    s.alpha = 1.2;
    s.phi = ScalingFunction::log_power(0.6);
    s.kernel_class = cls;
    for (int trial = 0; trial < 20; ++trial) {
      const auto k = KernelFunction<2>::random(s, rng);
      CHECK_NOTHROW(k.check_bounds());
      std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi), rad(-6.0, 6.0);
      for (int i = 0; i < 50; ++i) {
        const double rho = std::exp(rad(rng)), t = ang(rng);
        const Point<2> y(rho * std::cos(t), rho * std::sin(t));
        const double stable = (2.0 - s.alpha) * std::pow(rho, -s.alpha);
        const double lower = s.lambda * stable + (cls == KernelClass::A4 ? s.lambda * s.phi(1.0 / rho) : 0.0);
        const double upper = s.Lambda * (stable + s.phi(1.0 / rho));
        CHECK(kernel_eval(k, y) >= lower * (1.0 - 1e-12));
        CHECK(kernel_eval(k, y) <= upper * (1.0 + 1e-12));
        CHECK(kernel_eval(k, y) == doctest::Approx(kernel_eval(k, Point<2>(-y))).epsilon(1e-14));
      }
    }
  }
  KernelSpec s;
  s.lambda = 1.0;
  s.Lambda = 2.0;
  s.alpha = 1.0;
  const auto k = KernelFunction<1>::uniform(s, 1.0, 1.0);
  CHECK_THROWS_AS(k(Point<1>::Zero()), Error);
  CHECK_THROWS_AS(KernelFunction<1>::uniform(s, 3.0, 1.0).check_bounds(), Error);
}
