#pragma once

// Monotone discretization of Dirichlet problems I u = f in Ω, u = g off Ω, for
// linear, Bellman (sup), extremal and Isaacs (inf-sup) operators.

#include "pucci/extremal_ops.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace pucci {

enum class ProblemKind { Linear, Bellman, Extremal, Isaacs };

/// Operator of a Dirichlet problem. Bellman is sup over `families[0]`;
/// Isaacs is inf over the outer list of sup over each inner list.
template <int Dim>
struct ProblemOperator {
  ProblemKind kind = ProblemKind::Linear;
  std::vector<std::vector<KernelFunction<Dim>>> families;
  std::optional<OperatorKind<Dim>> extremal;

  static ProblemOperator linear(KernelFunction<Dim> k) { return {ProblemKind::Linear, {{std::move(k)}}, std::nullopt}; }
  static ProblemOperator bellman(std::vector<KernelFunction<Dim>> ks) { return {ProblemKind::Bellman, {std::move(ks)}, std::nullopt}; }
  static ProblemOperator extremal_op(OperatorKind<Dim> k) { return {ProblemKind::Extremal, {}, std::move(k)}; }
  static ProblemOperator isaacs(std::vector<std::vector<KernelFunction<Dim>>> f) { return {ProblemKind::Isaacs, std::move(f), std::nullopt}; }
};

template <int Dim>
struct DirichletProblem {
  KernelSpec spec;
  GridGeometry<Dim> geometry;
  std::vector<char> mask;  // Ω as a subset of interior nodes, indexed by flat node index
  GridFunction<Dim> data;  // g: node values off Ω plus the exterior descriptor
  Eigen::VectorXd rhs;     // f at every node (only Ω entries are used)
  ProblemOperator<Dim> op;

  void validate() const;
  Eigen::Index domain_size() const;
};

/// Builds a problem from a domain predicate, exterior data and a right-hand side.
template <int Dim>
DirichletProblem<Dim> make_problem(const KernelSpec& spec, const GridGeometry<Dim>& geometry,
                                   const std::function<bool(const Point<Dim>&)>& domain, const Exterior<Dim>& g,
                                   const std::function<double(const Point<Dim>&)>& f, ProblemOperator<Dim> op);

struct SolverConfig {
  double tol = 0.0;  // 0 selects 1e-8·(1 + sup|f| + sup|g|)
  int max_iters = 100;
  double damping = 1.0;
};

/// Dense operator restricted to Ω: (I_h u)(x_i) = Σ_k A(i,k) u(x_k) + b(i).
struct OperatorMatrix {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<Eigen::Index> nodes;  // flat node index of each unknown
  std::vector<int> unknown;         // flat node index -> unknown (-1 off Ω)
};

template <int Dim>
OperatorMatrix assemble(const KernelFunction<Dim>& kernel, const DirichletProblem<Dim>& problem);

struct SolveReport {
  int iterations = 0;          // linear solves performed
  int policy_iterations = 0;   // outer policy updates
  double residual = 0.0;
  double tolerance = 0.0;
  bool converged = false;
};

template <int Dim>
struct Solution {
  GridFunction<Dim> u;
  SolveReport report;
};

template <int Dim>
Solution<Dim> solve_linear(const DirichletProblem<Dim>& problem, const SolverConfig& config = {});

template <int Dim>
Solution<Dim> solve_policy(const DirichletProblem<Dim>& problem, const SolverConfig& config = {});

/// Dispatches on the operator kind.
template <int Dim>
Solution<Dim> solve(const DirichletProblem<Dim>& problem, const SolverConfig& config = {});

/// sup over Ω of |I_h u - f|, evaluated through apply_levy.
template <int Dim>
double residual(const GridFunction<Dim>& u, const DirichletProblem<Dim>& problem);

/// I_h u at one node (through apply_levy).
template <int Dim>
double apply_problem_operator(const GridFunction<Dim>& u, const DirichletProblem<Dim>& problem, const Index<Dim>& x);

/// u with Ω values replaced by `omega_values` and the data elsewhere.
template <int Dim>
GridFunction<Dim> extend_by_data(const DirichletProblem<Dim>& problem, const OperatorMatrix& m, const Eigen::VectorXd& omega_values);

double default_tolerance(const Eigen::VectorXd& rhs_on_domain, double data_sup);

}  // namespace pucci
