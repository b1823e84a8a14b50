#include "pucci/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace pucci::cli {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Command c) {
  switch (c) {
    case Command::VerifyKernel: return "verify-kernel";
    case Command::Barrier: return "barrier";
    case Command::Eval: return "eval";
    case Command::Solve: return "solve";
    case Command::Lab: return "lab";
  }
  return "?";
}

namespace {

std::string join_errors(const std::vector<FieldError>& errors) {
  std::string s;
  for (const auto& e : errors) s += (s.empty() ? "" : "\n") + (e.path.empty() ? std::string("/") : e.path) + ": " + e.message;
  return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<FieldError> errors) : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

namespace {

// ---- strict JSON reading ------------------------------------------------

class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<FieldError>& errors) : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) error("", "expected an object");
  }

  ~Reader() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) errors_.push_back({path_ + "/" + it.key(), "unknown field"});
    }
  }

  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.is_object() && j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return path_ + "/" + key; }

  void error(const std::string& key, const std::string& message) { errors_.push_back({key.empty() ? path_ : path(key), message}); }

  double number(const std::string& key, double fallback, bool required = false) {
    if (!has(key)) {
      if (required) error(key, "missing field");
      return fallback;
    }
    const json& v = j_.at(key);
    if (!v.is_number()) {
      error(key, "expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  long long integer(const std::string& key, long long fallback, bool required = false) {
    if (!has(key)) {
      if (required) error(key, "missing field");
      return fallback;
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) {
      error(key, "expected an integer");
      return fallback;
    }
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) {
      error(key, "expected true or false");
      return fallback;
    }
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback, bool required = false) {
    if (!has(key)) {
      if (required) error(key, "missing field");
      return fallback;
    }
    const json& v = j_.at(key);
    if (!v.is_string()) {
      error(key, "expected a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback, bool required = false) {
    if (!has(key)) {
      if (required) error(key, "missing field");
      return fallback;
    }
    const json& v = j_.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) {
      error(key, "expected a number or an array of numbers");
      return fallback;
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) {
        error(key, "expected an array of numbers");
        return fallback;
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) {
      error(key, "expected an array of strings");
      return fallback;
    }
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) {
        error(key, "expected an array of strings");
        return fallback;
      }
      out.push_back(e.get<std::string>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<FieldError>& errors_;
  std::set<std::string> seen_;
};

std::optional<Command> command_from(const std::string& s) {
  if (s == "verify-kernel") return Command::VerifyKernel;
  if (s == "barrier") return Command::Barrier;
  if (s == "eval") return Command::Eval;
  if (s == "solve") return Command::Solve;
  if (s == "lab") return Command::Lab;
  return std::nullopt;
}

// Runs a library validator and records its message against `path`.
template <class F>
bool guarded(std::vector<FieldError>& errors, const std::string& path, F&& f) {
  try {
    f();
    return true;
  } catch (const Error& e) {
    errors.push_back({path, e.what()});
    return false;
  }
}

KernelSpec read_kernel(const json& j, const std::string& path, std::vector<FieldError>& errors) {
  Reader r(j, path, errors);
  KernelSpec spec;
  spec.lambda = r.number("lambda", 1.0, true);
  spec.Lambda = r.number("Lambda", 2.0, true);
  spec.alpha = r.number("alpha", 1.5, true);
  const std::string cls = r.string("class", "A3");
  if (cls == "A3") spec.kernel_class = KernelClass::A3;
  else if (cls == "A4") spec.kernel_class = KernelClass::A4;
  else r.error("class", "expected \"A3\" or \"A4\"");

  bool phi_ok = false;
  if (!r.has("phi")) {
    r.error("phi", "missing field");
  } else {
    const std::size_t before = errors.size();
    Reader p(r.raw("phi"), r.path("phi"), errors);
    const std::string family = p.string("family", "power", true);
    const double beta = p.number("beta", 0.5, true);
    const double kappa0 = p.number("kappa0", 1.0);
    std::optional<double> exponent;
    if (p.has("exponent")) exponent = p.number("exponent", beta);
    std::vector<double> t, v;
    if (family == "tabulated") {
      t = p.numbers("t", {}, true);
      v = p.numbers("values", {}, true);
    }
    if (errors.size() == before) {
      phi_ok = guarded(errors, r.path("phi"), [&] {
        if (family == "power") spec.phi = ScalingFunction::power(beta, kappa0, exponent);
        else if (family == "log_power" || family == "log") spec.phi = ScalingFunction::log_power(beta, kappa0, exponent);
        else if (family == "tabulated") spec.phi = ScalingFunction::tabulated(beta, kappa0, t, v);
        else fail(ErrorKind::Configuration, "unknown phi family '" + family + "' (expected power, log_power or tabulated)");
      });
    }
  }
  if (phi_ok) guarded(errors, path, [&] { spec.validate(); });
  return spec;
}

KernelConfig read_kernel_coefficients(const json& j, const std::string& path, std::vector<FieldError>& errors) {
  Reader r(j, path, errors);
  KernelConfig k;
  k.c_stable = r.numbers("c_stable", {}, true);
  k.c_phi = r.numbers("c_phi", {}, true);
  k.cutoff = r.boolean("cutoff", false);
  return k;
}

std::vector<KernelConfig> read_kernel_list(const json& j, const std::string& path, std::vector<FieldError>& errors) {
  std::vector<KernelConfig> out;
  if (!j.is_array() || j.empty()) {
    errors.push_back({path, "expected a nonempty array of kernels"});
    return out;
  }
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_kernel_coefficients(j[i], path + "/" + std::to_string(i), errors));
  return out;
}

OperatorConfig read_operator(const json& j, const std::string& path, std::vector<FieldError>& errors) {
  Reader r(j, path, errors);
  OperatorConfig op;
  op.kind = r.string("kind", "extremal", true);
  if (op.kind == "extremal") {
    op.variant = r.string("variant", "plus");
    static const std::set<std::string> variants = {"plus", "minus", "mplus", "mminus", "tilde_plus", "tilde_minus"};
    if (!variants.count(op.variant)) r.error("variant", "expected plus, minus, mplus, mminus, tilde_plus or tilde_minus");
    op.scale = static_cast<int>(r.integer("scale", 0));
    if (op.scale < 0 || op.scale > 40) r.error("scale", "scale index must lie in [0, 40]");
  } else if (op.kind == "linear") {
    if (r.has("kernel")) op.families = {{read_kernel_coefficients(r.raw("kernel"), r.path("kernel"), errors)}};
    else r.error("kernel", "missing field");
  } else if (op.kind == "bellman") {
    if (r.has("kernels")) op.families = {read_kernel_list(r.raw("kernels"), r.path("kernels"), errors)};
    else r.error("kernels", "missing field");
  } else if (op.kind == "isaacs") {
    if (!r.has("families")) {
      r.error("families", "missing field");
    } else {
      const json& f = r.raw("families");
      if (!f.is_array() || f.empty()) r.error("families", "expected a nonempty array of kernel arrays");
      else
        for (std::size_t i = 0; i < f.size(); ++i) op.families.push_back(read_kernel_list(f[i], r.path("families") + "/" + std::to_string(i), errors));
    }
  } else {
    r.error("kind", "expected linear, bellman, extremal or isaacs");
  }
  return op;
}

ExteriorConfig read_exterior(const json& j, const std::string& path, std::vector<FieldError>& errors) {
  ExteriorConfig e;
  if (j.is_number()) {
    e.constant = j.get<double>();
    return e;
  }
  Reader r(j, path, errors);
  if (r.has("constant")) {
    e.constant = r.number("constant", 0.0);
    if (r.has("expr")) r.error("expr", "give either constant or expr");
    return e;
  }
  e.expr = r.string("expr", "", true);
  e.far_radius = r.number("far_radius", 0.0, true);
  e.far_value = r.number("far_value", 0.0);
  if (!(e.far_radius > 0.0)) r.error("far_radius", "far_radius must be positive");
  return e;
}

void check_expression(const std::string& text, int dim, const std::string& path, std::vector<FieldError>& errors) {
  guarded(errors, path, [&] { Expression::parse(text, dim); });
}

int read_dim(Reader& r, std::vector<FieldError>&) {
  const int dim = static_cast<int>(r.integer("dim", 1));
  if (dim != 1 && dim != 2) r.error("dim", "dimension must be 1 or 2");
  return dim;
}

std::optional<MeasurementKind> measurement_from(const std::string& s) {
  if (s == "holder") return MeasurementKind::Holder;
  if (s == "weak_harnack") return MeasurementKind::WeakHarnack;
  if (s == "harnack") return MeasurementKind::Harnack;
  if (s == "boundary_harnack") return MeasurementKind::BoundaryHarnack;
  return std::nullopt;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  std::vector<FieldError> errors;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({{"", std::string("invalid JSON: ") + e.what()}});
  }
  RunConfig cfg;
  {
    Reader r(doc, "", errors);
    if (!doc.is_object()) throw ConfigError(errors);
    const std::string cmd = r.string("command", "", true);
    if (auto c = command_from(cmd)) cfg.command = *c;
    else if (!cmd.empty()) r.error("command", "expected verify-kernel, barrier, eval, solve or lab");
    const long long seed = r.integer("seed", 0);
    if (seed < 0) r.error("seed", "seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(std::max(0LL, seed));
    if (!errors.empty()) throw ConfigError(errors);

    if (cfg.command != Command::Lab) {
      if (r.has("kernel")) cfg.spec = read_kernel(r.raw("kernel"), "/kernel", errors);
      else r.error("kernel", "missing block");
    }

    switch (cfg.command) {
      case Command::VerifyKernel: {
        cfg.verify.samples = static_cast<int>(r.integer("samples", 2000));
        if (cfg.verify.samples < 10) r.error("samples", "need at least 10 samples");
        break;
      }
      case Command::Barrier: {
        auto& b = cfg.barrier;
        b.dim = read_dim(r, errors);
        b.r = r.number("r", 1.0);
        const auto range = r.numbers("alpha_range", {cfg.spec.alpha, cfg.spec.alpha});
        if (range.size() == 2) b.alpha_range = {range[0], range[1]};
        else r.error("alpha_range", "expected [alpha0, alpha1]");
        b.resolution_ratio = r.number("resolution_ratio", 16.0);
        if (!(b.resolution_ratio >= 8.0)) r.error("resolution_ratio", "the near-field radius needs h <= delta/8 (ratio >= 8)");
        if (r.has("params")) {
          Reader p(r.raw("params"), "/params", errors);
          BarrierParams params;
          params.p = p.number("p", 2.0, true);
          params.delta = p.number("delta", 1.0 / 32.0, true);
          params.r = b.r;
          params.n = b.dim;
          params.alpha_range = b.alpha_range;
          guarded(errors, "/params", [&] { params.validate(); });
          b.params = params;
        } else {
          BarrierParams probe;
          probe.p = b.dim + 1;
          probe.delta = b.r / 32.0;
          probe.r = b.r;
          probe.n = b.dim;
          probe.alpha_range = b.alpha_range;
          guarded(errors, "", [&] { probe.validate(); });
        }
        break;
      }
      case Command::Eval: {
        auto& e = cfg.eval;
        e.dim = read_dim(r, errors);
        if (r.has("operator")) e.op = read_operator(r.raw("operator"), "/operator", errors);
        else r.error("operator", "missing block");
        if (e.op.kind == "bellman" || e.op.kind == "isaacs") r.error("operator", "eval supports extremal and linear operators");
        if (r.has("function")) e.function = read_exterior(r.raw("function"), "/function", errors);
        else r.error("function", "missing block");
        if (!e.function.constant && !e.function.expr.empty()) check_expression(e.function.expr, e.dim, "/function/expr", errors);
        e.h = r.number("h", 1.0 / 64.0);
        if (!(e.h > 0.0)) r.error("h", "h must be positive");
        e.rel_tol = r.number("rel_tol", 1e-10);
        if (!(e.rel_tol > 0.0)) r.error("rel_tol", "rel_tol must be positive");
        e.points_path = r.string("points", "");
        break;
      }
      case Command::Solve: {
        auto& s = cfg.solve;
        s.dim = read_dim(r, errors);
        if (r.has("grid")) {
          Reader g(r.raw("grid"), "/grid", errors);
          s.radius = g.number("radius", 1.0);
          s.cells = static_cast<int>(g.integer("cells", 64, true));
          if (!(s.radius > 0.0)) g.error("radius", "radius must be positive");
          if (s.cells < 4 || s.cells % 2 != 0) g.error("cells", "cells must be an even integer >= 4");
        } else {
          r.error("grid", "missing block");
        }
        s.domain = r.string("domain", "", true);
        if (!s.domain.empty()) check_expression(s.domain, s.dim, "/domain", errors);
        s.f = r.string("f", "0");
        check_expression(s.f, s.dim, "/f", errors);
        if (r.has("g")) s.g = read_exterior(r.raw("g"), "/g", errors);
        else s.g.constant = 0.0;
        if (!s.g.constant && !s.g.expr.empty()) check_expression(s.g.expr, s.dim, "/g/expr", errors);
        if (r.has("operator")) s.op = read_operator(r.raw("operator"), "/operator", errors);
        else r.error("operator", "missing block");
        if (r.has("solver")) {
          Reader q(r.raw("solver"), "/solver", errors);
          s.solver.tol = q.number("tol", 0.0);
          s.solver.max_iters = static_cast<int>(q.integer("max_iters", 100));
          s.solver.damping = q.number("damping", 1.0);
          if (s.solver.tol < 0.0) q.error("tol", "tol must be non-negative (0 selects the default)");
          if (s.solver.max_iters < 1) q.error("max_iters", "max_iters must be positive");
          if (!(s.solver.damping > 0.0 && s.solver.damping <= 1.0)) q.error("damping", "damping must lie in (0, 1]");
        }
        break;
      }
      case Command::Lab: {
        auto& l = cfg.lab;
        l.lambda = r.number("lambda", 1.0);
        l.Lambda = r.number("Lambda", 2.0);
        l.alphas = r.numbers("alphas", {});
        l.phi_families = r.strings("phi_families", {"power"});
        l.cells = static_cast<int>(r.integer("cells", l.cells));
        l.cells_2d = static_cast<int>(r.integer("cells_2d", l.cells_2d));
        l.cells_holder = static_cast<int>(r.integer("cells_holder", l.cells_holder));
        l.tail_radii = r.numbers("tail_radii", l.tail_radii);
        for (const char* key : {"cells", "cells_2d", "cells_holder"}) {
          const int v = key == std::string("cells") ? l.cells : key == std::string("cells_2d") ? l.cells_2d : l.cells_holder;
          if (v < 8 || v % 2 != 0) r.error(key, "cell counts must be even integers >= 8");
        }
        for (double t : l.tail_radii)
          if (!(t > 0.0 && t <= 0.5)) r.error("tail_radii", "tail radii must lie in (0, 1/2]");
        const std::string data = r.string("harnack_data", "annulus");
        if (data == "annulus") l.harnack_data = HarnackData::Annulus;
        else if (data == "constant") l.harnack_data = HarnackData::Constant;
        else r.error("harnack_data", "expected annulus or constant");
        for (const auto& m : r.strings("measurements", {})) {
          if (auto k = measurement_from(m)) l.measurements.push_back(*k);
          else r.error("measurements", "unknown measurement '" + m + "' (expected holder, weak_harnack, harnack or boundary_harnack)");
        }
        for (const auto& f : l.phi_families) {
          if (f != "power" && f != "log") r.error("phi_families", "unknown phi family '" + f + "' (expected power or log)");
        }
        if (!(l.lambda > 0.0 && l.Lambda >= l.lambda)) r.error("Lambda", "need 0 < lambda <= Lambda");
        for (double a : l.alphas)
          if (!(a > 0.0 && a < 2.0)) r.error("alphas", "alpha must lie in (0, 2)");
        l.seed = cfg.seed;
        break;
      }
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

// ---- output helpers -----------------------------------------------------

void write_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorKind::Io, "write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::Io, "cannot move output into place at " + path);
  }
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Secondary artifact next to the primary output: run.json -> run.points.csv.
std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / p.stem()).string() + suffix;
}

json kernel_json(const KernelSpec& s) {
  json phi = {{"family", to_string(s.phi.family())}, {"beta", s.phi.beta()}, {"kappa0", s.phi.kappa0()}, {"exponent", s.phi.exponent()}};
  return {{"lambda", s.lambda}, {"Lambda", s.Lambda}, {"alpha", s.alpha}, {"class", to_string(s.kernel_class)}, {"phi", phi}};
}

json report_header(const RunConfig& c) {
  json j;
  j["schema_version"] = 1;
  j["command"] = to_string(c.command);
  j["seed"] = c.seed;
  return j;
}

// Primary output goes to --out when given, otherwise to stdout.
void emit(const std::string& path, const std::string& contents) {
  if (path.empty()) std::cout << contents;
  else write_atomic(path, contents);
}

template <int Dim>
KernelFunction<Dim> make_kernel(const KernelSpec& spec, const KernelConfig& k) {
  using C = typename KernelFunction<Dim>::Coefficients;
  constexpr int pairs = KernelFunction<Dim>::kPairs;
  const auto expand = [&](const std::vector<double>& v, const char* name) {
    if (v.size() == 1) return C(C::Constant(v[0]));
    if (static_cast<int>(v.size()) != pairs) {
      fail(ErrorKind::Configuration, std::string(name) + " needs 1 or " + std::to_string(pairs) + " coefficients in dimension " + std::to_string(Dim));
    }
    C c;
    for (int i = 0; i < pairs; ++i) c[i] = v[i];
    return c;
  };
  KernelFunction<Dim> kernel(spec, expand(k.c_stable, "c_stable"), expand(k.c_phi, "c_phi"), k.cutoff);
  kernel.check_bounds();
  return kernel;
}

template <int Dim>
OperatorKind<Dim> operator_kind(const KernelSpec& spec, const OperatorConfig& op) {
  if (op.kind == "linear") return OperatorKind<Dim>::linear(make_kernel<Dim>(spec, op.families.at(0).at(0)));
  if (op.variant == "plus") return OperatorKind<Dim>::plus();
  if (op.variant == "minus") return OperatorKind<Dim>::minus();
  if (op.variant == "mplus") return OperatorKind<Dim>::mplus(op.scale);
  if (op.variant == "mminus") return OperatorKind<Dim>::mminus(op.scale);
  if (op.variant == "tilde_plus") return OperatorKind<Dim>::tilde_plus();
  return OperatorKind<Dim>::tilde_minus();
}

template <int Dim>
ProblemOperator<Dim> problem_operator(const KernelSpec& spec, const OperatorConfig& op) {
  const auto family = [&](const std::vector<KernelConfig>& ks) {
    std::vector<KernelFunction<Dim>> out;
    for (const auto& k : ks) out.push_back(make_kernel<Dim>(spec, k));
    return out;
  };
  if (op.kind == "linear") return ProblemOperator<Dim>::linear(make_kernel<Dim>(spec, op.families.at(0).at(0)));
  if (op.kind == "bellman") return ProblemOperator<Dim>::bellman(family(op.families.at(0)));
  if (op.kind == "isaacs") {
    std::vector<std::vector<KernelFunction<Dim>>> fams;
    for (const auto& f : op.families) fams.push_back(family(f));
    return ProblemOperator<Dim>::isaacs(std::move(fams));
  }
  return ProblemOperator<Dim>::extremal_op(operator_kind<Dim>(spec, op));
}

template <int Dim>
FieldFunction<Dim> field_from(const ExteriorConfig& e) {
  if (e.constant) {
    const double c = *e.constant;
    FieldFunction<Dim> f;
    f.value = [c](const Point<Dim>&) { return c; };
    f.far_radius = 1.0;
    f.far_value = c;
    f.sup_bound = std::abs(c);
    f.label = num(c);
    return f;
  }
  return expression_field<Dim>(Expression::parse(e.expr, Dim), e.far_radius, e.far_value);
}

template <int Dim>
Exterior<Dim> exterior_from(const ExteriorConfig& e) {
  if (e.constant) return *e.constant == 0.0 ? Exterior<Dim>::zero() : Exterior<Dim>::constant_value(*e.constant);
  return Exterior<Dim>::from_formula(field_from<Dim>(e));
}

// ---- commands -----------------------------------------------------------

int run_verify_kernel(const RunConfig& c, const Outputs& o) {
  const KernelSpec& s = c.spec;
  const auto scaling = check_upper_scaling(s.phi, c.verify.samples);
  const double dini = dini_integral(s.phi);
  json j = report_header(c);
  j["kernel"] = kernel_json(s);
  j["upper_scaling"] = {{"samples", c.verify.samples}, {"max_violation", scaling.max_violation}, {"pass", scaling.pass}};
  j["dini_integral"] = dini;
  if (s.phi.family() == PhiFamily::Power) j["dini_closed_form"] = s.phi.scale_factor() / s.phi.exponent();
  j["phi_non_decreasing"] = s.phi.non_decreasing();

  bool bounds_ok = true;
  std::string bounds_msg;
  std::mt19937_64 rng(c.seed);
  try {
    KernelFunction<1>::random(s, rng).check_bounds();
    KernelFunction<2>::random(s, rng).check_bounds();
  } catch (const Error& e) {
    bounds_ok = false;
    bounds_msg = e.what();
  }
  j["random_kernel_bounds"] = {{"pass", bounds_ok}, {"message", bounds_msg}};
  const bool pass = scaling.pass && std::isfinite(dini) && bounds_ok;
  j["pass"] = pass;
  emit(o.out, j.dump(2) + "\n");
  return pass ? 0 : 1;
}

template <int Dim>
int run_barrier_dim(const RunConfig& c, const Outputs& o) {
  const auto& b = c.barrier;
  BarrierParams params;
  bool searched = false;
  if (b.params) {
    params = *b.params;
  } else {
    SearchOptions opts;
    opts.resolution_ratio = b.resolution_ratio;
    params = search_barrier_params<Dim>(b.r, c.spec, b.alpha_range, opts);
    searched = true;
  }
  std::vector<double> alphas = {params.alpha_range[0], 0.5 * (params.alpha_range[0] + params.alpha_range[1]), params.alpha_range[1]};
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());

  json j = report_header(c);
  j["kernel"] = kernel_json(c.spec);
  j["params"] = {{"p", params.p}, {"delta", params.delta}, {"r", params.r}, {"n", params.n},
                 {"alpha_range", {params.alpha_range[0], params.alpha_range[1]}}, {"searched", searched}};
  const double h = params.delta / b.resolution_ratio;
  j["resolution"] = h;
  std::string csv = Dim == 1 ? "alpha,x1,value,budget\n" : "alpha,x1,x2,value,budget\n";
  bool pass = true;
  double grid_min = kInf, tolerance = 0.0;
  json certs = json::array();
  for (double a : alphas) {
    const auto cert = verify_barrier<Dim>(params, c.spec.with_alpha(a), h);
    pass = pass && cert.pass;
    grid_min = std::min(grid_min, cert.grid_min);
    tolerance = std::max(tolerance, cert.tolerance);
    certs.push_back({{"alpha", a}, {"grid_min", cert.grid_min}, {"tolerance", cert.tolerance}, {"pass", cert.pass},
                     {"points", cert.values.size()}});
    for (std::size_t i = 0; i < cert.values.size(); ++i) {
      csv += num(a);
      for (double x : cert.points[i]) csv += "," + num(x);
      csv += "," + num(cert.values[i]) + "," + num(cert.budgets[i]) + "\n";
    }
  }
  j["grid_min"] = grid_min;
  j["tolerance"] = tolerance;
  j["certificates"] = certs;
  j["pass"] = pass;
  if (!o.out.empty()) write_atomic(sibling(o.out, ".points.csv"), csv);
  emit(o.out, j.dump(2) + "\n");
  return pass ? 0 : 1;
}

std::vector<std::vector<double>> read_points(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read points file " + path);
  std::vector<std::vector<double>> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (pts.empty() && lineno == 1) continue;  // header
      fail(ErrorKind::Configuration, path + ":" + std::to_string(lineno) + ": non-numeric point");
    }
    if (static_cast<int>(row.size()) != dim) {
      fail(ErrorKind::Configuration, path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim) + " coordinates");
    }
    pts.push_back(row);
  }
  return pts;
}

template <int Dim>
int run_eval_dim(const RunConfig& c, const Outputs& o) {
  const auto& e = c.eval;
  const std::string path = !o.points.empty() ? o.points : e.points_path;
  if (path.empty()) fail(ErrorKind::Configuration, "eval needs --points or a \"points\" field");
  const auto pts = read_points(path, Dim);
  const auto kind = operator_kind<Dim>(c.spec, e.op);
  const auto field = field_from<Dim>(e.function);
  std::string csv = Dim == 1 ? "x1,value,near,mid,tail,err\n" : "x1,x2,value,near,mid,tail,err\n";
  for (const auto& p : pts) {
    Point<Dim> x;
    for (int k = 0; k < Dim; ++k) x[k] = p[k];
    const auto v = eval_operator_field<Dim>(kind, c.spec, field, x, e.h, e.rel_tol);
    for (int k = 0; k < Dim; ++k) csv += num(x[k]) + ",";
    csv += num(v.value) + "," + num(v.near_field) + "," + num(v.mid_field) + "," + num(v.tail) + "," + num(v.error_budget()) + "\n";
  }
  emit(o.out, csv);
  return 0;
}

template <int Dim>
int run_solve_dim(const RunConfig& c, const Outputs& o) {
  const auto& s = c.solve;
  const Expression domain = Expression::parse(s.domain, Dim);
  const Expression f = Expression::parse(s.f, Dim);
  const GridGeometry<Dim> geo{s.radius, s.cells};
  const auto problem = make_problem<Dim>(
      c.spec, geo, [&](const Point<Dim>& x) { return domain(x) > 0.0; }, exterior_from<Dim>(s.g),
      [&](const Point<Dim>& x) { return f(x); }, problem_operator<Dim>(c.spec, s.op));
  const auto sol = solve(problem, s.solver);

  std::string csv = Dim == 1 ? "x1,value\n" : "x1,x2,value\n";
  for (Eigen::Index k = 0; k < geo.size(); ++k) {
    const Point<Dim> x = geo.coord(geo.multi(k));
    for (int d = 0; d < Dim; ++d) csv += num(x[d]) + ",";
    csv += num(sol.u.values()[k]) + "\n";
  }
  json j = report_header(c);
  j["kernel"] = kernel_json(c.spec);
  j["dim"] = Dim;
  j["grid"] = {{"radius", s.radius}, {"cells", s.cells}};
  j["operator"] = s.op.kind;
  if (s.op.kind == "isaacs") j["note"] = "finite Isaacs family of our own construction";
  j["unknowns"] = problem.domain_size();
  j["iterations"] = sol.report.iterations;
  j["policy_iterations"] = sol.report.policy_iterations;
  j["residual"] = sol.report.residual;
  j["tolerance"] = sol.report.tolerance;
  j["converged"] = sol.report.converged;
  if (!o.out.empty()) {
    write_atomic(sibling(o.out, ".summary.json"), j.dump(2) + "\n");
    write_atomic(o.out, csv);
  } else {
    std::cout << csv;
  }
  return sol.report.converged ? 0 : 1;
}

std::string record_name(const ExperimentRecord& r) {
  std::ostringstream s;
  s << r.measurement << "_" << r.phi_family << "_alpha" << num(r.alpha);
  if (r.measurement == "weak_harnack") s << "_r" << num(r.radius);
  return s.str() + ".json";
}

json record_json(const ExperimentRecord& r) {
  return {{"measurement", r.measurement}, {"alpha", r.alpha},        {"phi_family", r.phi_family},
          {"radius", r.radius},           {"quotient", jnum(r.quotient)}, {"gamma_hat", jnum(r.gamma_hat)},
          {"eps_fit", jnum(r.eps_fit)},   {"ratio_min", jnum(r.ratio_min)}, {"ratio_max", jnum(r.ratio_max)},
          {"residual", r.residual},       {"cells", r.cells},           {"pass", r.pass},
          {"note", r.note}};
}

int run_lab(const RunConfig& c, const Outputs& o) {
  const std::string dir = o.out_dir.empty() ? std::string(".") : o.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory " + dir);
  const auto bundle = run_experiment(c.lab);
  std::string csv = "measurement,alpha,phi_family,radius,quotient,gamma_hat,eps_fit,ratio_min,ratio_max,residual,cells,pass\n";
  bool pass = true;
  for (const auto& r : bundle.records) {
    csv += r.measurement + "," + num(r.alpha) + "," + r.phi_family + "," + num(r.radius) + "," + num(r.quotient) + "," +
           num(r.gamma_hat) + "," + num(r.eps_fit) + "," + num(r.ratio_min) + "," + num(r.ratio_max) + "," + num(r.residual) + "," +
           std::to_string(r.cells) + "," + (r.pass ? "1" : "0") + "\n";
    json j = report_header(c);
    j["record"] = record_json(r);
    write_atomic((fs::path(dir) / record_name(r)).string(), j.dump(2) + "\n");
    pass = pass && r.pass;
  }
  write_atomic((fs::path(dir) / "lab.csv").string(), csv);
  return pass ? 0 : 1;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidSpec:
    case ErrorKind::InvalidFunction:
    case ErrorKind::Configuration:
    case ErrorKind::Dimension:
    case ErrorKind::UnboundedFunction:
    case ErrorKind::ClassMismatch:
    case ErrorKind::Precondition:
    case ErrorKind::Domain: return 2;
    case ErrorKind::Io: return 3;
    default: return 1;
  }
}

}  // namespace

int run(const RunConfig& config, const Outputs& outputs, std::ostream& log) {
  try {
    switch (config.command) {
      case Command::VerifyKernel: return run_verify_kernel(config, outputs);
      case Command::Barrier:
        return config.barrier.dim == 1 ? run_barrier_dim<1>(config, outputs) : run_barrier_dim<2>(config, outputs);
      case Command::Eval: return config.eval.dim == 1 ? run_eval_dim<1>(config, outputs) : run_eval_dim<2>(config, outputs);
      case Command::Solve: return config.solve.dim == 1 ? run_solve_dim<1>(config, outputs) : run_solve_dim<2>(config, outputs);
      case Command::Lab: return run_lab(config, outputs);
    }
  } catch (const Error& e) {
    log << "pucci " << to_string(config.command) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    log << "pucci " << to_string(config.command) << ": " << e.what() << "\n";
    return 3;
  }
  return 2;
}

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal Pucci operators: kernel checks, barrier certificates, evaluation, Dirichlet solves and regularity experiments"};
  app.require_subcommand(1);
  std::string config_path, out, out_dir, points;
  int threads = 1;
  std::optional<std::uint64_t> seed;

  for (const char* name : {"verify-kernel", "barrier", "eval", "solve", "lab"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--out", out, "primary output file (stdout when omitted)");
    sub->add_option("--out-dir", out_dir, "output directory (lab)");
    sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "overrides the config seed");
    if (std::string(name) == "eval") sub->add_option("--points", points, "CSV of evaluation points");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  Eigen::setNbThreads(threads);

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "pucci " << cmd << ": cannot read config " << config_path << "\n";
    return 3;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  RunConfig cfg;
  try {
    json doc = json::parse(text);
    if (doc.is_object() && !doc.contains("command")) {
      doc["command"] = cmd;
      text = doc.dump();
    }
    cfg = parse_config(text);
  } catch (const json::parse_error& e) {
    std::cerr << "pucci " << cmd << ": invalid JSON: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    for (const auto& fe : e.errors()) std::cerr << "pucci " << cmd << ": " << (fe.path.empty() ? "/" : fe.path) << ": " << fe.message << "\n";
    return 2;
  }
  if (to_string(cfg.command) != cmd) {
    std::cerr << "pucci " << cmd << ": config is for command " << to_string(cfg.command) << "\n";
    return 2;
  }
  if (seed) {
    cfg.seed = *seed;
    cfg.lab.seed = *seed;
  }
  return run(cfg, Outputs{out, out_dir, points}, std::cerr);
}

}  // namespace pucci::cli
