#include "pucci/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

namespace pucci {

template <int Dim>
void DirichletProblem<Dim>::validate() const {
  spec.validate();
  const Eigen::Index n = geometry.size();
  if (static_cast<Eigen::Index>(mask.size()) != n) fail(ErrorKind::Configuration, "domain mask size does not match the grid");
  if (rhs.size() != n) fail(ErrorKind::Configuration, "rhs size does not match the grid");
  if (!(data.geometry() == geometry)) fail(ErrorKind::Configuration, "exterior data lives on another grid");
  if (!std::isfinite(data.sup_bound())) fail(ErrorKind::UnboundedFunction, "exterior data must be bounded");
  Eigen::Index count = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!mask[k]) continue;
    if (!geometry.interior(geometry.multi(k))) fail(ErrorKind::Configuration, "domain contains a box boundary node");
    if (!std::isfinite(rhs[k])) fail(ErrorKind::InvalidFunction, "rhs is not finite on the domain");
    ++count;
  }
  if (count == 0) fail(ErrorKind::Configuration, "domain is empty");
  switch (op.kind) {
    case ProblemKind::Linear:
      if (op.families.size() != 1 || op.families[0].size() != 1) fail(ErrorKind::Configuration, "linear problem needs exactly one kernel");
      break;
    case ProblemKind::Bellman:
      if (op.families.size() != 1 || op.families[0].empty()) fail(ErrorKind::Configuration, "Bellman problem needs a nonempty kernel family");
      break;
    case ProblemKind::Extremal:
      if (!op.extremal) fail(ErrorKind::Configuration, "extremal problem without an operator kind");
      break;
    case ProblemKind::Isaacs:
      if (op.families.empty()) fail(ErrorKind::Configuration, "Isaacs problem needs at least one family");
      for (const auto& fam : op.families)
        if (fam.empty()) fail(ErrorKind::Configuration, "Isaacs family is empty");
      break;
  }
}

template <int Dim>
Eigen::Index DirichletProblem<Dim>::domain_size() const {
  return std::count_if(mask.begin(), mask.end(), [](char c) { return c != 0; });
}

template <int Dim>
DirichletProblem<Dim> make_problem(const KernelSpec& spec, const GridGeometry<Dim>& geometry,
                                   const std::function<bool(const Point<Dim>&)>& domain, const Exterior<Dim>& g,
                                   const std::function<double(const Point<Dim>&)>& f, ProblemOperator<Dim> op) {
  const Eigen::Index n = geometry.size();
  std::vector<char> mask(n, 0);
  Eigen::VectorXd values(n);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Index<Dim> m = geometry.multi(k);
    const Point<Dim> z = geometry.coord(m);
    mask[k] = geometry.interior(m) && domain(z);
    values[k] = g.at(z);
    rhs[k] = f(z);
  }
  DirichletProblem<Dim> p{spec, geometry, std::move(mask), GridFunction<Dim>(geometry, values, g), std::move(rhs), std::move(op)};
  p.validate();
  return p;
}

double default_tolerance(const Eigen::VectorXd& rhs_on_domain, double data_sup) {
  const double f_sup = rhs_on_domain.size() ? rhs_on_domain.cwiseAbs().maxCoeff() : 0.0;
  return 1e-8 * (1.0 + f_sup + data_sup);
}

namespace {

// Sign rules indexed [outer][inner]: I = min over outer of max over inner.
template <int Dim>
std::vector<std::vector<SignRule<Dim>>> problem_rules(const DirichletProblem<Dim>& p) {
  std::vector<std::vector<SignRule<Dim>>> rules;
  if (p.op.kind == ProblemKind::Extremal) {
    rules.push_back({sign_rule(*p.op.extremal, p.spec)});
    return rules;
  }
  for (const auto& fam : p.op.families) {
    rules.emplace_back();
    for (const auto& k : fam) rules.back().push_back(sign_rule(OperatorKind<Dim>::linear(k), p.spec));
  }
  return rules;
}

// The discrete operator on Ω. Grid data and exterior values are cached on a
// lattice padded by the block size, so a row never calls the exterior formula.
template <int Dim>
class Discretization {
 public:
  explicit Discretization(const DirichletProblem<Dim>& p)
      : problem_(p), ev_(p.spec, p.geometry), rules_(problem_rules(p)),
        half_width_(required_half_width(p.geometry, p.data.exterior())) {
    const auto& geo = p.geometry;
    for (Eigen::Index k = 0; k < geo.size(); ++k) {
      if (p.mask[k]) {
        unknown_.push_back(static_cast<int>(nodes_.size()));
        nodes_.push_back(k);
      } else {
        unknown_.push_back(-1);
      }
    }
    const auto& t = ev_.tables(half_width_, false);
    pad_ = t.stable.block;
    side_ = geo.nodes_per_axis() + 2 * pad_;
    long total = 1;
    for (int d = 0; d < Dim; ++d) total *= side_;
    lattice_value_.assign(total, 0.0);
    lattice_unknown_.assign(total, -1);
    for (long L = 0; L < total; ++L) {
      Index<Dim> m;
      long r = L;
      for (int d = 0; d < Dim; ++d) {
        m[d] = static_cast<int>(r % side_) - pad_;
        r /= side_;
      }
      lattice_value_[L] = p.data.at(m);
      if (geo.contains(m)) lattice_unknown_[L] = unknown_[geo.flat(m)];
    }
    for (const auto& j : t.stable.offsets) deltas_.push_back(lattice_delta(j));
    for (int d = 0; d < Dim; ++d) unit_.push_back(lattice_delta(Index<Dim>::Unit(d)));
    // Linear rules do not depend on signs, so their per-offset weights are combined once.
    for (const auto& fam : rules_) {
      combined_.emplace_back();
      for (const auto& rule : fam) {
        combined_.back().emplace_back();
        if (!rule.is_linear()) continue;
        const auto& tr = ev_.tables(half_width_, rule.phi_cutoff);
        auto& w = combined_.back().back();
        for (std::size_t k = 0; k < tr.stable.offsets.size(); ++k) {
          const Eigen::Array2d c = rule.coef(tr.stable.pair[k], true);
          w.push_back(2.0 * (c[0] * tr.stable.weights[k] + c[1] * tr.phi.weights[k]));
          if (!(w.back() >= 0.0)) fail(ErrorKind::Internal, "negative weight in the operator matrix");
        }
      }
    }
    rhs_.resize(size());
    for (int i = 0; i < size(); ++i) rhs_[i] = p.rhs[nodes_[i]];
    set_iterate(Eigen::VectorXd::Zero(size()));
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<std::vector<SignRule<Dim>>>& rules() const { return rules_; }
  const Eigen::VectorXd& rhs() const { return rhs_; }
  const GridFunction<Dim>& iterate() const { return *current_; }
  const Eigen::VectorXd& iterate_values() const { return x_; }
  const std::vector<Eigen::Index>& nodes() const { return nodes_; }
  const std::vector<int>& unknown() const { return unknown_; }

  GridFunction<Dim> extend(const Eigen::VectorXd& x) const {
    Eigen::VectorXd v = problem_.data.values();
    for (int i = 0; i < size(); ++i) v[nodes_[i]] = x[i];
    return GridFunction<Dim>(problem_.geometry, std::move(v), problem_.data.exterior());
  }

  void set_iterate(const Eigen::VectorXd& x) {
    x_ = x;
    for (int i = 0; i < size(); ++i) lattice_value_[lattice_of(nodes_[i])] = x[i];
    current_ = std::make_unique<GridFunction<Dim>>(extend(x));
  }

  // Operator value at unknown i for the current iterate. When `At` is given the
  // row linearized at the iterate's sign pattern is written into column i of At
  // (the transposed matrix, for contiguous writes) and b[i].
  double row(int i, int outer, int inner, Eigen::MatrixXd* At, Eigen::VectorXd* b) const {
    const SignRule<Dim>& rule = rules_[outer][inner];
    const std::vector<double>& combined = combined_[outer][inner];
    const auto& t = ev_.tables(half_width_, rule.phi_cutoff);
    const auto& ws = t.stable;
    const auto& wp = t.phi;
    const double h = problem_.geometry.spacing();
    const long L0 = lattice_of(nodes_[i]);
    const double u0 = lattice_value_[L0];
    const bool linear = rule.is_linear();
    double value = 0.0;
    double diag = 0.0;
    double constant = 0.0;
    const auto add = [&](long L, double w) {
      const int k = lattice_unknown_[L];
      if (k >= 0)
        (*At)(k, i) += w;
      else
        constant += w * lattice_value_[L];
    };
    const auto term = [&](long dl, int pair, double w_s, double w_p) {
      const double up = lattice_value_[L0 + dl];
      const double um = lattice_value_[L0 - dl];
      const double d = up + um - 2.0 * u0;
      const Eigen::Array2d c = rule.coef(pair, linear || d >= 0.0);
      const double w = 2.0 * (c[0] * w_s + c[1] * w_p);
      value += w * d;
      if (At) {
        if (!(w >= 0.0)) fail(ErrorKind::Internal, "negative weight in the operator matrix");
        add(L0 + dl, w);
        add(L0 - dl, w);
        diag -= 2.0 * w;
      }
    };
    if (combined.empty()) {
      for (std::size_t k = 0; k < deltas_.size(); ++k) term(deltas_[k], ws.pair[k], ws.weights[k], wp.weights[k]);
    } else if (!At) {
      for (std::size_t k = 0; k < deltas_.size(); ++k)
        value += combined[k] * (lattice_value_[L0 + deltas_[k]] + lattice_value_[L0 - deltas_[k]] - 2.0 * u0);
    } else {
      for (std::size_t k = 0; k < deltas_.size(); ++k) {
        const double w = combined[k];
        value += w * (lattice_value_[L0 + deltas_[k]] + lattice_value_[L0 - deltas_[k]] - 2.0 * u0);
        add(L0 + deltas_[k], w);
        add(L0 - deltas_[k], w);
        diag -= 2.0 * w;
      }
    }
    const double inner_s = ws.inner_effective() / (h * h);
    const double inner_p = wp.inner_effective() / (h * h);
    for (int d = 0; d < Dim; ++d) term(unit_[d], -1, inner_s, inner_p);
    const TailTerms tail = tail_contribution(*current_, problem_.geometry.multi(nodes_[i]), ws, wp, ev_.stable_weight(),
                                             ev_.phi_weight(rule.phi_cutoff), rule);
    value += tail.value(u0);
    if (At) {
      if (!(tail.diagonal >= 0.0)) fail(ErrorKind::Internal, "tail closure has a negative diagonal");
      diag -= tail.diagonal;
      constant += tail.constant;
      (*At)(i, i) += diag;
      (*b)[i] = constant;
    }
    return value;
  }

 private:
  long lattice_delta(const Index<Dim>& j) const {
    long s = 0;
    for (int d = Dim - 1; d >= 0; --d) s = s * side_ + j[d];
    return s;
  }
  long lattice_of(Eigen::Index flat) const {
    const Index<Dim> m = problem_.geometry.multi(flat);
    long s = 0;
    for (int d = Dim - 1; d >= 0; --d) s = s * side_ + (m[d] + pad_);
    return s;
  }

  const DirichletProblem<Dim>& problem_;
  ExtremalEvaluator<Dim> ev_;
  std::vector<std::vector<SignRule<Dim>>> rules_;
  std::vector<std::vector<std::vector<double>>> combined_;
  double half_width_;
  std::vector<Eigen::Index> nodes_;
  std::vector<int> unknown_;
  int pad_ = 0;
  long side_ = 0;
  std::vector<double> lattice_value_;
  std::vector<int> lattice_unknown_;
  std::vector<long> deltas_;
  std::vector<long> unit_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd x_;
  std::unique_ptr<GridFunction<Dim>> current_;
};

// Checks the M-matrix sign pattern on the transposed matrix (one column per row of A).
void check_monotone(const Eigen::MatrixXd& At) {
  for (Eigen::Index i = 0; i < At.cols(); ++i) {
    const double diag = At(i, i);
    if (!(diag < 0.0)) fail(ErrorKind::Internal, "operator matrix has a non-negative diagonal entry");
    const double sum = At.col(i).sum();
    if (sum > 1e-12 * std::abs(diag)) fail(ErrorKind::Internal, "operator matrix row sum is positive");
  }
}

// Selection at one unknown: (outer, inner) indices and the value.
struct Choice {
  int outer = 0;
  int inner = 0;
  double value = 0.0;
};

template <int Dim>
Choice best_inner(const Discretization<Dim>& disc, int i, int outer) {
  const auto& fam = disc.rules()[outer];
  Choice c{outer, 0, -kInf};
  for (int b = 0; b < static_cast<int>(fam.size()); ++b) {
    const double v = disc.row(i, outer, b, nullptr, nullptr);
    if (v > c.value) c = {outer, b, v};
  }
  return c;
}

template <int Dim>
Choice best_choice(const Discretization<Dim>& disc, int i) {
  Choice best{0, 0, kInf};
  for (int a = 0; a < static_cast<int>(disc.rules().size()); ++a) {
    const Choice c = best_inner(disc, i, a);
    if (c.value < best.value) best = c;
  }
  return best;
}

enum class Method { Direct, Symmetric };

// Dense LU kept across policy steps: consecutive policy matrices differ in few
// entries, so the previous factorization preconditions iterative refinement.
struct DirectSolver {
  std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> lu;

  Eigen::VectorXd solve(const Eigen::MatrixXd& At, const Eigen::VectorXd& rhs, double tol, const Eigen::VectorXd& guess) {
    if (lu) {
      Eigen::VectorXd x = guess;
      double last = kInf;
      for (int k = 0; k < 30; ++k) {
        const Eigen::VectorXd r = rhs - At.transpose() * x;
        const double size = r.cwiseAbs().maxCoeff();
        if (size <= 0.01 * tol) return x;
        if (!(size < 0.5 * last)) break;
        last = size;
        x += lu->solve(r);
      }
    }
    lu.emplace(At.transpose());
    return lu->solve(rhs);
  }
};

// Solves A x = rhs given At = Aᵀ.
Eigen::VectorXd linear_solve(const Eigen::MatrixXd& At, const Eigen::VectorXd& rhs, Method method, double tol,
                             const Eigen::VectorXd& guess, DirectSolver& direct) {
  if (method == Method::Direct) return direct.solve(At, rhs, tol, guess);
  // -A is symmetric positive definite for a single symmetric kernel, so At serves as A.
  const Eigen::MatrixXd M = -At;
  Eigen::ConjugateGradient<Eigen::MatrixXd, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.compute(M);
  cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * At.rows()));
  cg.setTolerance(std::max(1e-15, 0.01 * tol / std::max(rhs.norm(), 1e-300)));
  Eigen::VectorXd x = cg.solve(-rhs);
  if (cg.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "conjugate gradients stopped after " << cg.iterations() << " iterations, relative residual " << cg.error();
    fail(ErrorKind::NonConvergence, msg.str());
  }
  return x;
}

template <int D>
OperatorMatrix make_matrix(const Discretization<D>& disc) {
  OperatorMatrix m;
  const int n = disc.size();
  Eigen::MatrixXd At = Eigen::MatrixXd::Zero(n, n);
  m.b = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) disc.row(i, 0, 0, &At, &m.b);
  check_monotone(At);
  m.A = At.transpose();
  m.nodes = disc.nodes();
  m.unknown = disc.unknown();
  return m;
}

template <int Dim>
Solution<Dim> run(const DirichletProblem<Dim>& problem, const SolverConfig& config, bool linear) {
  problem.validate();
  if (!(config.damping > 0.0 && config.damping <= 1.0)) fail(ErrorKind::Configuration, "damping must lie in (0, 1]");
  if (config.max_iters < 1) fail(ErrorKind::Configuration, "max_iters must be positive");
  if (config.tol < 0.0) fail(ErrorKind::Configuration, "tolerance must be positive");
  Discretization<Dim> disc(problem);
  const int n = disc.size();
  const double tol = config.tol > 0.0 ? config.tol : default_tolerance(disc.rhs(), problem.data.sup_bound());
  const Method method = linear && Dim == 2 ? Method::Symmetric : Method::Direct;
  DirectSolver direct;
  const int outer_count = static_cast<int>(disc.rules().size());

  SolveReport report;
  report.tolerance = tol;
  Eigen::MatrixXd At(n, n);
  Eigen::VectorXd b(n);
  double res = kInf;
  std::vector<int> outer(n, 0);
  std::set<std::vector<int>> seen;
  double best_residual = kInf;

  for (int sweep = 0;; ++sweep) {
    // Inner loop: outer selection frozen, Howard iteration on the sup part and the sign pattern.
    for (;;) {
      At.setZero();
      res = 0.0;
      for (int i = 0; i < n; ++i) {
        const auto& fam = disc.rules()[outer[i]];
        const int pick = fam.size() == 1 ? 0 : best_inner(disc, i, outer[i]).inner;
        const double value = disc.row(i, outer[i], pick, &At, &b);
        res = std::max(res, std::abs(value - disc.rhs()[i]));
      }
      if (res <= tol) break;
      if (report.iterations >= config.max_iters) {
        std::ostringstream msg;
        msg << "policy iteration did not reach tolerance " << tol << " in " << config.max_iters << " solves; residual " << res;
        fail(ErrorKind::NonConvergence, msg.str());
      }
      check_monotone(At);
      const Eigen::VectorXd x_new = linear_solve(At, disc.rhs() - b, method, tol, disc.iterate_values(), direct);
      ++report.iterations;
      if (config.damping == 1.0)
        disc.set_iterate(x_new);
      else
        disc.set_iterate(disc.iterate_values() + config.damping * (x_new - disc.iterate_values()));
    }
    if (outer_count == 1) break;
    // Outer update: the minimizing family at each point.
    res = 0.0;
    std::vector<int> next(n);
    for (int i = 0; i < n; ++i) {
      const Choice c = best_choice(disc, i);
      next[i] = c.outer;
      res = std::max(res, std::abs(c.value - disc.rhs()[i]));
    }
    if (res <= tol) break;
    ++report.policy_iterations;
    if (next == outer || (seen.count(next) && res >= best_residual)) {
      std::ostringstream msg;
      msg << "Isaacs policy repeats without residual decrease (residual " << res << "); increase damping";
      fail(ErrorKind::Cycling, msg.str());
    }
    best_residual = std::min(best_residual, res);
    seen.insert(outer);
    outer = std::move(next);
    if (sweep + 1 >= config.max_iters) fail(ErrorKind::NonConvergence, "Isaacs outer iteration exhausted max_iters");
  }

  report.residual = res;
  report.converged = res <= tol;
  return {disc.iterate(), report};
}

}  // namespace

template <int Dim>
OperatorMatrix assemble(const KernelFunction<Dim>& kernel, const DirichletProblem<Dim>& problem) {
  DirichletProblem<Dim> p = problem;
  p.op = ProblemOperator<Dim>::linear(kernel);
  p.validate();
  Discretization<Dim> disc(p);
  return make_matrix(disc);
}

template <int Dim>
Solution<Dim> solve_linear(const DirichletProblem<Dim>& problem, const SolverConfig& config) {
  if (problem.op.kind != ProblemKind::Linear) fail(ErrorKind::Configuration, "solve_linear needs a linear operator");
  return run(problem, config, true);
}

template <int Dim>
Solution<Dim> solve_policy(const DirichletProblem<Dim>& problem, const SolverConfig& config) {
  return run(problem, config, false);
}

template <int Dim>
Solution<Dim> solve(const DirichletProblem<Dim>& problem, const SolverConfig& config) {
  return problem.op.kind == ProblemKind::Linear ? solve_linear(problem, config) : solve_policy(problem, config);
}

namespace {

template <int Dim>
GridFunction<Dim> clamp_to_data(const GridFunction<Dim>& u, const DirichletProblem<Dim>& p) {
  if (!(u.geometry() == p.geometry)) fail(ErrorKind::Dimension, "grid function does not match the problem grid");
  Eigen::VectorXd v = p.data.values();
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (p.mask[k]) v[k] = u.values()[k];
  return GridFunction<Dim>(p.geometry, std::move(v), p.data.exterior());
}

template <int Dim>
double operator_value(const ExtremalEvaluator<Dim>& ev, const std::vector<std::vector<SignRule<Dim>>>& rules,
                      const GridFunction<Dim>& u, const Index<Dim>& x) {
  double lo = kInf;
  for (const auto& fam : rules) {
    double hi = -kInf;
    for (const auto& r : fam) hi = std::max(hi, ev.terms(r, u, x).value());
    lo = std::min(lo, hi);
  }
  return lo;
}

}  // namespace

template <int Dim>
double residual(const GridFunction<Dim>& u, const DirichletProblem<Dim>& problem) {
  problem.validate();
  const GridFunction<Dim> v = clamp_to_data(u, problem);
  const ExtremalEvaluator<Dim> ev(problem.spec, problem.geometry);
  const auto rules = problem_rules(problem);
  double res = 0.0;
  for (Eigen::Index k = 0; k < problem.geometry.size(); ++k) {
    if (!problem.mask[k]) continue;
    res = std::max(res, std::abs(operator_value(ev, rules, v, problem.geometry.multi(k)) - problem.rhs[k]));
  }
  return res;
}

template <int Dim>
double apply_problem_operator(const GridFunction<Dim>& u, const DirichletProblem<Dim>& problem, const Index<Dim>& x) {
  const ExtremalEvaluator<Dim> ev(problem.spec, problem.geometry);
  return operator_value(ev, problem_rules(problem), clamp_to_data(u, problem), x);
}

template <int Dim>
GridFunction<Dim> extend_by_data(const DirichletProblem<Dim>& problem, const OperatorMatrix& m, const Eigen::VectorXd& omega_values) {
  if (omega_values.size() != static_cast<Eigen::Index>(m.nodes.size())) fail(ErrorKind::Dimension, "vector size does not match the domain");
  Eigen::VectorXd v = problem.data.values();
  for (std::size_t i = 0; i < m.nodes.size(); ++i) v[m.nodes[i]] = omega_values[i];
  return GridFunction<Dim>(problem.geometry, std::move(v), problem.data.exterior());
}

#define PUCCI_SOLVER_INSTANTIATE(D)                                                                                      \
  template struct DirichletProblem<D>;                                                                                   \
  template DirichletProblem<D> make_problem(const KernelSpec&, const GridGeometry<D>&,                                   \
                                            const std::function<bool(const Point<D>&)>&, const Exterior<D>&,             \
                                            const std::function<double(const Point<D>&)>&, ProblemOperator<D>);          \
  template OperatorMatrix assemble(const KernelFunction<D>&, const DirichletProblem<D>&);                                \
  template Solution<D> solve_linear(const DirichletProblem<D>&, const SolverConfig&);                                    \
  template Solution<D> solve_policy(const DirichletProblem<D>&, const SolverConfig&);                                    \
  template Solution<D> solve(const DirichletProblem<D>&, const SolverConfig&);                                           \
  template double residual(const GridFunction<D>&, const DirichletProblem<D>&);                                          \
  template double apply_problem_operator(const GridFunction<D>&, const DirichletProblem<D>&, const Index<D>&);           \
  template GridFunction<D> extend_by_data(const DirichletProblem<D>&, const OperatorMatrix&, const Eigen::VectorXd&);

PUCCI_SOLVER_INSTANTIATE(1)
PUCCI_SOLVER_INSTANTIATE(2)

}  // namespace pucci
