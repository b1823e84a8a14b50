// Acceptance suite: one PASS/FAIL line per criterion. With an argument N only
// criterion N runs. Exit status is nonzero when any criterion fails.

#include "fixtures.hpp"
#include "oracle.hpp"
#include "pucci/barriers.hpp"
#include "pucci/regularity_lab.hpp"
#include "pucci/solver.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

using namespace pucci;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, const char* f = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1: barrier certificates -------------------------------------------

template <int Dim>
void barrier_case(Outcome& o, double alpha, bool log_phi, double limit_s) {
  const auto s = fixtures::spec(alpha, log_phi);
  const auto t0 = std::chrono::steady_clock::now();
  const auto params = search_barrier_params<Dim>(1.0, s, {alpha, alpha});
  const auto c16 = verify_barrier<Dim>(params, s, params.delta / 16.0);
  const auto c32 = verify_barrier<Dim>(params, s, params.delta / 32.0);
  const double t = seconds_since(t0);
  const std::string tag = "d=" + std::to_string(Dim) + " a=" + fmt(alpha) + (log_phi ? " log" : " pow");
  o.detail << " " << tag << ":p=" << fmt(params.p) << ",delta=" << fmt(params.delta) << ",min16=" << fmt(c16.grid_min)
           << ",min32=" << fmt(c32.grid_min) << "," << fmt(t, "%.0f") << "s";
  o.require(c16.grid_min >= -1e-6 && c32.grid_min >= -1e-6, tag + " grid_min");
  o.require(t <= limit_s, tag + " runtime");
}

Outcome criterion1() {
  Outcome o;
  for (double a : {0.6, 1.0, 1.5, 1.8})
    for (bool l : {false, true}) barrier_case<1>(o, a, l, 120.0);
  for (double a : {0.6, 1.0, 1.5, 1.8})
    for (bool l : {false, true}) barrier_case<2>(o, a, l, 600.0);
  return o;
}

// ---- 2: operator algebra ----------------------------------------------

Outcome criterion2() {
  Outcome o;
  const GridGeometry<1> geo = GridGeometry<1>::from_spacing(2.0, 4.0 / 512.0);
  const auto s = fixtures::spec(1.3, true, KernelClass::A4);
  ExtremalEvaluator<1> ev(s, geo);
  std::mt19937_64 rng(20240517);
  std::vector<GridFunction<1>> bumps;
  for (int k = 0; k < 50; ++k) bumps.push_back(GridFunction<1>::sample(geo, fixtures::random_bump(rng)));
  const auto points = fixtures::nodes_within(geo, 1.5, 16);
  double worst_dual = 0.0, worst_order = -kInf, worst_homog = -kInf, worst_add = -kInf, worst_scale = -kInf;
  const auto P = OperatorKind<1>::plus(), M = OperatorKind<1>::minus();
  for (int k = 0; k < 50; ++k) {
    const auto& u = bumps[k];
    const auto& v = bumps[(k + 1) % 50];
    const auto neg = u.scaled(-1.0), tu = u.scaled(3.0), sum = GridFunction<1>::combine(1.0, u, 1.0, v);
    const auto ord = operator_ordering_check(s, u, points);
    worst_order = std::max(worst_order, ord.max_violation);
    for (const auto& m : points) {
      const auto pu = ev.evaluate(P, u, m), mu = ev.evaluate(M, u, m);
      const auto pn = ev.evaluate(P, neg, m);
      worst_dual = std::max(worst_dual, std::abs(pn.value + mu.value) / std::max(std::abs(mu.value), 1e-300));
      for (const auto& [kind, base] : {std::pair{P, pu}, std::pair{M, mu}}) {
        const auto t = ev.evaluate(kind, tu, m);
        worst_homog = std::max(worst_homog, std::abs(t.value - 3.0 * base.value) - t.error_budget() - 3.0 * base.error_budget());
      }
      const auto pv = ev.evaluate(P, v, m), mv = ev.evaluate(M, v, m);
      const auto ps = ev.evaluate(P, sum, m), ms = ev.evaluate(M, sum, m);
      const double b = ps.error_budget() + pu.error_budget() + pv.error_budget();
      const double bm = ms.error_budget() + mu.error_budget() + mv.error_budget();
      worst_add = std::max(worst_add, ps.value - pu.value - pv.value - b);
      worst_add = std::max(worst_add, mu.value + mv.value - ms.value - bm);
      for (int i : {1, 3, 10}) {
        const auto pi = ev.evaluate(OperatorKind<1>::mplus(i), u, m);
        worst_scale = std::max(worst_scale, pi.value - pu.value - pi.error_budget() - pu.error_budget());
      }
    }
  }
  o.detail << " 50 bumps x " << points.size() << " nodes: ordering " << fmt(worst_order) << ", duality " << fmt(worst_dual)
           << ", homogeneity " << fmt(worst_homog) << ", additivity " << fmt(worst_add) << ", scale " << fmt(worst_scale)
           << " (violations beyond budget)";
  o.require(worst_order <= 0.0, "ordering");
  o.require(worst_dual <= 1e-12, "duality");
  o.require(worst_homog <= 0.0, "homogeneity");
  o.require(worst_add <= 0.0, "sub/superadditivity");
  o.require(worst_scale <= 0.0, "scale monotonicity");
  return o;
}

// ---- 3: quadrature oracle ---------------------------------------------

double bump(double x) {
  const double t = 1.0 - x * x;
  return t > 0.0 ? t * t : 0.0;
}

Outcome criterion3() {
  Outcome o;
  const auto geo = GridGeometry<1>::from_spacing(2.0, 1.0 / 256.0);
  FieldFunction<1> f;
  f.value = [](const Point<1>& z) { return bump(z[0]); };
  f.far_radius = 1.0;
  f.kinks = {1.0};
  f.sup_bound = 1.0;
  const auto u = GridFunction<1>::sample(geo, f);
  const double a = required_half_width(geo, u.exterior());
  const auto rule = SignRule<1>::constant(1.0, 1.0, 1.0, 1.0);
  for (double alpha : {0.8, 1.6}) {
    for (bool stable_part : {true, false}) {
      const auto rs = RadialWeight::stable(alpha, stable_part ? 1.0 : 0.0);
      const auto rp = RadialWeight::phi(ScalingFunction::power(0.5 * alpha), stable_part ? 0.0 : 1.0);
      const auto ws = precompute_weights(geo, rs, a), wp = precompute_weights(geo, rp, a);
      const RadialWeight& active = stable_part ? rs : rp;
      double worst = 0.0;
      for (int k = 0; k < 20; ++k) {
        const Index<1> m = geo.nearest(Point<1>(-1.9 + 3.8 * (k + 0.5) / 20.0));
        const double x = geo.coord(m)[0];
        const double got = apply_levy(u, m, ws, wp, rs, rp, rule).value();
        const double ref = oracle::levy_1d(bump, std::abs(x) < 1.0 ? 12.0 * x * x - 4.0 : 0.0, x, [&](double y) { return active.density(y); },
                                           {std::abs(1.0 - x), std::abs(1.0 + x)}, 1.0 + std::abs(x));
        worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
      }
      const std::string tag = std::string(stable_part ? "stable" : "phi") + " a=" + fmt(alpha);
      o.detail << " " << tag << ": max rel err " << fmt(worst);
      o.require(worst <= 1e-3, tag);
    }
  }
  return o;
}

// ---- 4: solver ----------------------------------------------------------

Outcome criterion4() {
  Outcome o;
  const auto ball = [](const Point<1>& x) { return std::abs(x[0]) < 1.0; };

  {  // (a) affine exactness
    const auto s = fixtures::spec(1.5);
    const GridGeometry<1> geo{1.0, 128};
    FieldFunction<1> ell;
    ell.value = [](const Point<1>& x) { return 0.3 + 0.7 * x[0]; };
    ell.far_radius = 3.0;
    ell.kinks = {3.0};
    ell.sup_bound = 0.3 + 0.7 * 3.0;
    const auto k = KernelFunction<1>::uniform(s, 1.2, 0.5);
    double worst = 0.0;
    for (auto op : {ProblemOperator<1>::linear(k), ProblemOperator<1>::extremal_op(OperatorKind<1>::plus()),
                    ProblemOperator<1>::extremal_op(OperatorKind<1>::minus()),
                    ProblemOperator<1>::isaacs({{k}, {KernelFunction<1>::uniform(s, 2.0, 0.0), k}})}) {
      auto p = make_problem<1>(s, geo, ball, Exterior<1>::from_formula(ell), [](const Point<1>&) { return 0.0; }, op);
      for (Eigen::Index i = 0; i < geo.size(); ++i)
        if (p.mask[i]) p.rhs[i] = apply_problem_operator(p.data, p, geo.multi(i));
      worst = std::max(worst, (solve(p).u.values() - p.data.values()).lpNorm<Eigen::Infinity>());
    }
    o.detail << " (a) affine err " << fmt(worst);
    o.require(worst <= 1e-10, "(a) affine exactness");
  }
  {  // (b) comparison principle
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.0, 1.0);
    const GridGeometry<1> geo{1.0, 64};
    double worst = -kInf;
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = fixtures::spec(0.6 + 1.2 * P(rng), trial % 2 == 1);
      const double f0 = U(rng), df = P(rng), g0 = U(rng), dg = P(rng), c = U(rng);
      const auto op = trial % 3 == 0 ? ProblemOperator<1>::linear(KernelFunction<1>::random(s, rng))
                                     : ProblemOperator<1>::extremal_op(trial % 3 == 1 ? OperatorKind<1>::plus() : OperatorKind<1>::minus());
      // I u1 ≥ I u2 in Ω and u1 ≤ u2 outside.
      const auto p1 = make_problem<1>(s, geo, ball, Exterior<1>::constant_value(g0),
                                      [&](const Point<1>& x) { return f0 + df + c * x[0] * x[0]; }, op);
      const auto p2 = make_problem<1>(s, geo, ball, Exterior<1>::constant_value(g0 + dg),
                                      [&](const Point<1>& x) { return f0 + c * x[0] * x[0]; }, op);
      worst = std::max(worst, (solve(p1).u.values() - solve(p2).u.values()).maxCoeff());
    }
    o.detail << "; (b) max(u1-u2) " << fmt(worst);
    o.require(worst <= 1e-10, "(b) comparison");
  }
  {  // (c) self-convergence; (d) singleton Bellman
    const auto s = fixtures::spec(1.5);
    const auto k = KernelFunction<1>::uniform(s, 1.5, 1.0);
    const auto f = [](const Point<1>&) { return -1.0; };
    std::vector<GridFunction<1>> sols;
    double bellman = 0.0;
    for (int n : {128, 256, 512, 1024}) {
      const GridGeometry<1> geo{1.0, n};
      const auto p = make_problem<1>(s, geo, ball, Exterior<1>::zero(), f, ProblemOperator<1>::linear(k));
      sols.push_back(solve_linear(p).u);
      if (n <= 512) {
        const auto pb = make_problem<1>(s, geo, ball, Exterior<1>::zero(), f, ProblemOperator<1>::bellman({k}));
        bellman = std::max(bellman, (solve_policy(pb).u.values() - sols.back().values()).lpNorm<Eigen::Infinity>());
      }
    }
    std::vector<double> diffs;
    for (std::size_t i = 0; i + 1 < sols.size(); ++i) {
      double d = 0.0;
      for (int j = 0; j <= sols[i].geometry().cells; ++j) d = std::max(d, std::abs(sols[i].at(Index<1>(j)) - sols[i + 1].at(Index<1>(2 * j))));
      diffs.push_back(d);
    }
    const double f1 = diffs[0] / diffs[1], f2 = diffs[1] / diffs[2];
    o.detail << "; (c) factors " << fmt(f1) << ", " << fmt(f2) << "; (d) Bellman diff " << fmt(bellman);
    o.require(f1 >= 1.5 && f2 >= 1.5, "(c) self-convergence");
    o.require(bellman <= 1e-12, "(d) singleton Bellman");
  }
  return o;
}

// ---- 5-8: regularity -----------------------------------------------------

Outcome criterion5() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.alphas = {0.8, 1.4};
  cfg.phi_families = {"power", "log"};
  cfg.tail_radii = {0.25, 0.5};
  cfg.measurements = {MeasurementKind::WeakHarnack};
  for (const auto& r : run_experiment(cfg).records) {
    const std::string tag = r.phi_family + " a=" + fmt(r.alpha) + " r=" + fmt(r.radius);
    o.detail << " " << tag << ":eps=" << fmt(r.eps_fit);
    o.require(r.pass && r.eps_fit > 0.0, tag);
  }
  return o;
}

Outcome criterion6() {
  Outcome o;
  const double alpha = 0.8;
  double gammas[2];
  int level = 0;
  for (int cells : {4096, 8192}) {
    ExperimentConfig cfg;
    cfg.alphas = {alpha};
    cfg.cells_holder = cells;
    cfg.measurements = {MeasurementKind::Holder};
    const auto r = run_experiment(cfg).records.at(0);
    gammas[level++] = r.gamma_hat;
    o.detail << " N=" << cells << ":gamma=" << fmt(r.gamma_hat) << ",resid=" << fmt(r.residual);
    o.require(r.gamma_hat >= 0.05 && r.residual <= 0.1, "N=" + std::to_string(cells));
  }
  o.detail << "; change " << fmt(std::abs(gammas[1] - gammas[0]));
  o.require(std::abs(gammas[1] - gammas[0]) <= 0.05, "refinement");

  FieldFunction<1> half;
  half.value = [](const Point<1>& x) { return std::sqrt(std::abs(x[0])); };
  half.sup_bound = 1.0;
  const auto control = oscillation_decay<1>(GridFunction<1>::sample(GridGeometry<1>{1.0, 4096}, half), Point<1>::Zero(), 8);
  o.detail << "; |x|^1/2 control " << fmt(control.gamma_hat);
  o.require(std::abs(control.gamma_hat - 0.5) <= 0.02, "control");
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::vector<std::vector<double>> q;
  for (int cells : {256, 512}) {
    ExperimentConfig cfg;
    cfg.alphas = {0.6, 1.0, 1.4, 1.8};
    cfg.cells = cells;
    cfg.measurements = {MeasurementKind::Harnack};
    std::vector<double> row;
    for (const auto& r : run_experiment(cfg).records) row.push_back(r.quotient);
    q.push_back(row);
  }
  double lo = kInf, hi = 0.0, drift = 0.0;
  bool finite = true;
  for (std::size_t k = 0; k < q[1].size(); ++k) {
    o.detail << " a=" << fmt(0.6 + 0.4 * k) << ":" << fmt(q[0][k]) << "/" << fmt(q[1][k]);
    finite = finite && std::isfinite(q[0][k]) && std::isfinite(q[1][k]) && q[1][k] > 0.0;
    lo = std::min(lo, q[1][k]);
    hi = std::max(hi, q[1][k]);
    drift = std::max(drift, std::abs(q[1][k] - q[0][k]) / q[1][k]);
  }
  o.detail << "; sweep ratio " << fmt(hi / lo) << ", refinement drift " << fmt(drift);
  o.require(finite, "finite quotients");
  o.require(hi / lo <= 10.0, "sweep ratio");
  o.require(drift <= 0.1, "refinement");
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto s = fixtures::spec(1.5);
  const auto fine = boundary_harnack_experiment(s, 128).report;
  const auto coarse = boundary_harnack_experiment(s, 64).report;
  const double qf = fine.ratio_max / fine.ratio_min, qc = coarse.ratio_max / coarse.ratio_min;
  o.detail << " N=128: [" << fmt(fine.ratio_min) << ", " << fmt(fine.ratio_max) << "] quotient " << fmt(qf) << "; N=64 quotient "
           << fmt(qc);
  o.require(fine.ratio_min > 0.0 && fine.ratio_min <= fine.ratio_max && std::isfinite(fine.ratio_max), "ratio bounds");
  o.require(std::abs(qf - qc) <= 0.2 * qf, "refinement");

  const auto half_ball = [](const Point<2>& x) { return x.norm() < 1.0 && x[0] > 0.0; };
  const auto p = make_problem<2>(s, GridGeometry<2>{1.0, 64}, half_ball, Exterior<2>::zero(), [](const Point<2>&) { return -1.0; },
                                 ProblemOperator<2>::linear(KernelFunction<2>::uniform(s, 1.5, 1.0)));
  const auto u = solve(p).u;
  BoundaryHarnackSetup<2> setup;
  setup.domain = half_ball;
  setup.x0 = Point<2>(0.25, 0.0);
  setup.rho = 0.1;
  const auto same = boundary_harnack(u, u, s, setup);
  o.detail << "; identical control [" << fmt(same.ratio_min, "%.17g") << ", " << fmt(same.ratio_max, "%.17g") << "]";
  o.require(same.ratio_min == 1.0 && same.ratio_max == 1.0, "identical control");
  return o;
}

// ---- 9: validators -------------------------------------------------------

Outcome criterion9() {
  Outcome o;
  for (const auto& [name, phi] : {std::pair{"power", ScalingFunction::power(0.7)}, std::pair{"log", ScalingFunction::log_power(0.7)}}) {
    const auto r = check_upper_scaling(phi, 4000);
    o.detail << " " << name << ":" << (r.pass ? "ok" : "violated");
    o.require(r.pass, std::string(name) + " upper scaling");
  }
  const auto wrong = check_upper_scaling(ScalingFunction::power(0.5, 1.0, 0.9), 4000);
  o.detail << " misdeclared:" << (wrong.pass ? "accepted" : "rejected");
  o.require(!wrong.pass, "misdeclared beta rejected");
  double worst = 0.0;
  for (double beta : {0.05, 0.3, 0.5, 0.9, 1.4, 1.9}) worst = std::max(worst, std::abs(dini_integral(ScalingFunction::power(beta)) * beta - 1.0));
  o.detail << "; Dini max rel err " << fmt(worst);
  o.require(worst <= 1e-8, "Dini closed form");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  using Fn = Outcome (*)();
  const Fn criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7, criterion8, criterion9};
  int first = 1, last = 9;
  if (argc > 1) {
    first = last = std::atoi(argv[1]);
    if (first < 1 || first > 9) {
      std::fprintf(stderr, "usage: acceptance [1-9]\n");
      return 2;
    }
  }
  bool all = true;
  for (int n = first; n <= last; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    std::printf("%s criterion %d:%s (%.0fs)\n", o.pass ? "PASS" : "FAIL", n, o.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
