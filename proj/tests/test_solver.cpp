#include "fixtures.hpp"
#include "pucci/solver.hpp"

#include <doctest.h>

using namespace pucci;

namespace {

const auto kBall1 = [](const Point<1>& x) { return std::abs(x[0]) < 1.0; };

FieldFunction<1> affine_field(double a, double b, double far) {
  FieldFunction<1> g;
  g.value = [a, b](const Point<1>& x) { return a + b * x[0]; };
  g.far_radius = far;
  g.far_value = 0.0;
  g.kinks = {far};
  g.sup_bound = std::abs(a) + std::abs(b) * far;
  return g;
}

double max_diff(const GridFunction<1>& u, const GridFunction<1>& v) {
  return (u.values() - v.values()).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("constant data gives the constant solution") {
  const auto s = fixtures::spec(1.3);
  const GridGeometry<1> geo{1.0, 64};
  for (auto op : {ProblemOperator<1>::linear(KernelFunction<1>::uniform(s, 1.5, 1.0)),
                  ProblemOperator<1>::extremal_op(OperatorKind<1>::plus()),
                  ProblemOperator<1>::extremal_op(OperatorKind<1>::minus())}) {
    const auto p = make_problem<1>(s, geo, kBall1, Exterior<1>::constant_value(2.0), [](const Point<1>&) { return 0.0; }, op);
    const auto sol = solve(p);
    CHECK((sol.u.values().array() - 2.0).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("affine data is recovered exactly") {
  const auto s = fixtures::spec(1.5);
  const GridGeometry<1> geo{1.0, 128};
  const auto g = Exterior<1>::from_formula(affine_field(0.3, 0.7, 3.0));
  const auto k = KernelFunction<1>::uniform(s, 1.2, 0.5);
  for (auto op : {ProblemOperator<1>::linear(k), ProblemOperator<1>::extremal_op(OperatorKind<1>::plus()),
                  ProblemOperator<1>::isaacs({{k}, {KernelFunction<1>::uniform(s, 2.0, 0.0), k}})}) {
    auto p = make_problem<1>(s, geo, kBall1, g, [](const Point<1>&) { return 0.0; }, op);
    // f = I_h applied to the affine function, so the affine function is the discrete solution.
    const auto ell = p.data;
    for (Eigen::Index i = 0; i < geo.size(); ++i) {
      if (p.mask[i]) p.rhs[i] = apply_problem_operator(ell, p, geo.multi(i));
    }
    const auto sol = solve(p);
    CHECK(max_diff(sol.u, ell) <= 1e-10);
    CHECK(sol.report.converged);
  }
}

TEST_CASE("discrete comparison principle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.0, 1.0);
  const GridGeometry<1> geo{1.0, 64};
  for (int trial = 0; trial < 6; ++trial) {
    const auto s = fixtures::spec(0.6 + 1.2 * P(rng), trial % 2 == 1);
    const double f0 = U(rng), df = P(rng), g0 = U(rng), dg = P(rng), c = U(rng);
    const auto op = trial % 3 == 0 ? ProblemOperator<1>::linear(KernelFunction<1>::random(s, rng))
                                   : ProblemOperator<1>::extremal_op(trial % 3 == 1 ? OperatorKind<1>::plus() : OperatorKind<1>::minus());
    // I u1 = f0 + df ≥ I u2 = f0 with g1 = g0 ≤ g2 = g0 + dg, so u1 ≤ u2.
    const auto p1 = make_problem<1>(s, geo, kBall1, Exterior<1>::constant_value(g0), [&](const Point<1>& x) { return f0 + df + c * x[0] * x[0]; }, op);
    const auto p2 = make_problem<1>(s, geo, kBall1, Exterior<1>::constant_value(g0 + dg), [&](const Point<1>& x) { return f0 + c * x[0] * x[0]; }, op);
    const auto u1 = solve(p1).u, u2 = solve(p2).u;
    CHECK((u1.values() - u2.values()).maxCoeff() <= 1e-10);
  }
}

TEST_CASE("singleton Bellman family reproduces the linear solve") {
  const auto s = fixtures::spec(1.5);
  const GridGeometry<1> geo{1.0, 128};
  const auto k = KernelFunction<1>::uniform(s, 1.5, 1.0);
  const auto f = [](const Point<1>&) { return -1.0; };
  const auto pl = make_problem<1>(s, geo, kBall1, Exterior<1>::zero(), f, ProblemOperator<1>::linear(k));
  const auto pb = make_problem<1>(s, geo, kBall1, Exterior<1>::zero(), f, ProblemOperator<1>::bellman({k}));
  const auto ul = solve_linear(pl), ub = solve_policy(pb);
  CHECK(max_diff(ul.u, ub.u) <= 1e-12);
  CHECK(residual(ul.u, pl) <= ul.report.tolerance * 10.0);
}

TEST_CASE("extremal solve has small residual and sits between linear solves") {
  const auto s = fixtures::spec(1.2);
  const GridGeometry<1> geo{1.0, 128};
  const auto f = [](const Point<1>&) { return -1.0; };
  const auto up = solve(make_problem<1>(s, geo, kBall1, Exterior<1>::zero(), f, ProblemOperator<1>::extremal_op(OperatorKind<1>::plus())));
  const auto um = solve(make_problem<1>(s, geo, kBall1, Exterior<1>::zero(), f, ProblemOperator<1>::extremal_op(OperatorKind<1>::minus())));
  const auto ul = solve(make_problem<1>(s, geo, kBall1, Exterior<1>::zero(), f, ProblemOperator<1>::linear(KernelFunction<1>::uniform(s, 1.5, 1.0))));
  CHECK(up.report.converged);
  CHECK(um.report.converged);
  // M⁺u_L ≥ L u_L = M⁺u⁺ makes u_L ≤ u⁺; symmetrically u⁻ ≤ u_L.
  CHECK((ul.u.values() - up.u.values()).maxCoeff() <= 1e-10);
  CHECK((um.u.values() - ul.u.values()).maxCoeff() <= 1e-10);
}

TEST_CASE("assembled matrix is monotone") {
  const auto s = fixtures::spec(0.9, true);
  const GridGeometry<2> geo{1.0, 12};
  const auto p = make_problem<2>(s, geo, [](const Point<2>& x) { return x.norm() < 0.9; }, Exterior<2>::zero(),
                                 [](const Point<2>&) { return 1.0; }, ProblemOperator<2>::linear(KernelFunction<2>::uniform(s, 1.5, 1.0)));
  const auto m = assemble(p.op.families[0][0], p);
  const auto n = m.A.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(m.A(i, i) < 0.0);
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) {
        CHECK(m.A(i, j) >= 0.0);
        off += m.A(i, j);
      }
    }
    CHECK(off + m.A(i, i) <= 1e-12 * std::abs(m.A(i, i)));
  }
}

TEST_CASE("problem validation") {
  const auto s = fixtures::spec(1.0);
  const GridGeometry<1> geo{1.0, 16};
  const auto f = [](const Point<1>&) { return 0.0; };
  CHECK_THROWS_AS(make_problem<1>(s, geo, [](const Point<1>&) { return false; }, Exterior<1>::zero(), f,
                                  ProblemOperator<1>::extremal_op(OperatorKind<1>::plus())),
                  Error);
  const auto p = make_problem<1>(s, geo, kBall1, Exterior<1>::zero(), f, ProblemOperator<1>::extremal_op(OperatorKind<1>::plus()));
  SolverConfig bad;
  bad.damping = 1.5;
  CHECK_THROWS_AS(solve(p, bad), Error);
}

TEST_CASE("default tolerance") {
  Eigen::VectorXd f(3);
  f << 1.0, -3.0, 2.0;
  CHECK(default_tolerance(f, 0.5) == doctest::Approx(1e-8 * 4.5));
}
