#pragma once

// Command-line front end: strict JSON configs, dispatch to the modules and
// atomic report emission.

#include "pucci/barriers.hpp"
#include "pucci/expression.hpp"
#include "pucci/regularity_lab.hpp"
#include "pucci/solver.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace pucci::cli {

enum class Command { VerifyKernel, Barrier, Eval, Solve, Lab };

const char* to_string(Command c);

struct FieldError {
  std::string path;  // JSON pointer of the offending field
  std::string message;
};

/// Thrown by parse_config with every field-level problem found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

struct VerifyKernelConfig {
  int samples = 2000;
};

struct BarrierConfig {
  int dim = 1;
  std::optional<BarrierParams> params;  // absent: search on r
  double r = 1.0;
  std::array<double, 2> alpha_range = {1.0, 1.0};
  double resolution_ratio = 16.0;  // h = δ / ratio
};

/// Closed-form exterior data: a constant or an expression on B_{far_radius}.
struct ExteriorConfig {
  std::optional<double> constant;
  std::string expr;
  double far_radius = 0.0;
  double far_value = 0.0;
};

struct KernelConfig {
  std::vector<double> c_stable;  // one per sector pair; a single value is broadcast
  std::vector<double> c_phi;
  bool cutoff = false;
};

struct OperatorConfig {
  std::string kind = "extremal";   // linear | bellman | extremal | isaacs
  std::string variant = "plus";    // extremal: plus | minus | mplus | mminus | tilde_plus | tilde_minus
  int scale = 0;
  std::vector<std::vector<KernelConfig>> families;  // linear: 1x1, bellman: 1xn, isaacs: mxn
};

struct EvalConfig {
  int dim = 1;
  OperatorConfig op;
  ExteriorConfig function;
  double h = 1.0 / 64.0;  // near-field radius
  double rel_tol = 1e-10;
  std::string points_path;
};

struct SolveConfig {
  int dim = 1;
  double radius = 1.0;
  int cells = 64;
  std::string domain;  // Ω = {expr > 0}
  std::string f = "0";
  ExteriorConfig g;
  OperatorConfig op;
  SolverConfig solver;
};

struct RunConfig {
  Command command = Command::VerifyKernel;
  KernelSpec spec;  // unused by lab
  std::uint64_t seed = 0;
  VerifyKernelConfig verify;
  BarrierConfig barrier;
  EvalConfig eval;
  SolveConfig solve;
  ExperimentConfig lab;
};

/// Parses and validates a JSON document. Unknown fields are errors.
RunConfig parse_config(const std::string& text);

struct Outputs {
  std::string out;      // primary output file
  std::string out_dir;  // lab directory
  std::string points;   // eval points CSV (overrides the config)
};

/// Runs a parsed config. Returns the exit status: 0 pass, 1 measurement or
/// certificate failure, 2 configuration error, 3 I/O failure. Diagnostics go to `log`.
int run(const RunConfig& config, const Outputs& outputs, std::ostream& log);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& contents);

/// Entry point shared by the executable: parses flags, reads the config, runs.
int main(int argc, char** argv);

}  // namespace pucci::cli
