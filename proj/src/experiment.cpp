#include "homp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "homp/higher_order.hpp"
#include "homp/linalg.hpp"
#include "homp/mirror_prox.hpp"

namespace homp {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kCsvHeader = "t,gamma_t,step_norm,eg_norm,branch,inner_iters,implicit_residual,fnorm,merit";

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ConfigurationError(fmt::format("config: field '{}': {}", path, what));
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) field_error(path, "expected an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      field_error(path.empty() ? item.key() : path + "." + item.key(), "unknown field");
    }
  }
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) field_error(path, "must be finite");
  return v;
}

double as_positive(const json& j, const std::string& path) {
  const double v = as_double(j, path);
  if (!(v > 0.0)) field_error(path, "must be > 0");
  return v;
}

int as_int(const json& j, const std::string& path, int lo) {
  if (!j.is_number_integer()) field_error(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < lo || v > 1'000'000'000) field_error(path, fmt::format("must be an integer >= {}", lo));
  return static_cast<int>(v);
}

std::uint64_t as_seed(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    field_error(path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) field_error(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) field_error(path, "expected a string");
  return j.get<std::string>();
}

Vector as_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) field_error(path, "expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_double(j[i], fmt::format("{}[{}]", path, i));
  return v;
}

Matrix as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) field_error(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const Vector row = as_vector(j[i], fmt::format("{}[{}]", path, i));
    if (i == 0) cols = static_cast<std::size_t>(row.size());
    if (static_cast<std::size_t>(row.size()) != cols) field_error(path, "rows have different lengths");
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

ProblemSpec parse_problem(const json& j, bool& seed_given) {
  const std::string path = "problem";
  reject_unknown(j, path, {"kind", "n", "n_x", "n_y", "A", "b", "c", "rho", "seed", "sets", "set_radius", "domain_radius"});
  ProblemSpec spec;
  if (!j.contains("kind")) field_error(join(path, "kind"), "required");
  try {
    spec.kind = problem_kind_from_string(as_string(j["kind"], join(path, "kind")));
  } catch (const ConfigurationError& e) {
    field_error(join(path, "kind"), e.what());
  }
  if (j.contains("n")) spec.n = as_int(j["n"], join(path, "n"), 1);
  if (j.contains("n_x")) spec.n_x = as_int(j["n_x"], join(path, "n_x"), 1);
  if (j.contains("n_y")) spec.n_y = as_int(j["n_y"], join(path, "n_y"), 1);
  if (j.contains("A")) {
    spec.A = as_matrix(j["A"], join(path, "A"));
    // Dimensions follow an explicit matrix unless given.
    if (!j.contains("n") && !j.contains("n_x") && !j.contains("n_y")) {
      if (spec.kind == ProblemKind::kMonotoneQuadratic || spec.A->rows() == spec.A->cols()) {
        spec.n = static_cast<int>(spec.A->rows());
      }
      if (spec.kind != ProblemKind::kMonotoneQuadratic && spec.A->rows() != spec.A->cols()) {
        spec.n_x = static_cast<int>(spec.A->rows());
        spec.n_y = static_cast<int>(spec.A->cols());
      }
    }
  }
  if (j.contains("b")) spec.b = as_vector(j["b"], join(path, "b"));
  if (j.contains("c")) spec.c = as_vector(j["c"], join(path, "c"));
  if (j.contains("rho")) spec.rho = as_positive(j["rho"], join(path, "rho"));
  seed_given = j.contains("seed");
  if (seed_given) spec.seed = as_seed(j["seed"], join(path, "seed"));
  if (j.contains("sets")) {
    const std::string s = as_string(j["sets"], join(path, "sets"));
    if (s == "whole_space") {
      spec.sets = SetKind::kWholeSpace;
    } else if (s == "ball") {
      spec.sets = SetKind::kBall;
    } else if (s == "simplex") {
      spec.sets = SetKind::kSimplex;
    } else {
      field_error(join(path, "sets"), "expected whole_space, ball or simplex");
    }
  }
  if (spec.kind == ProblemKind::kMatrixGame) spec.sets = SetKind::kSimplex;
  if (j.contains("set_radius")) spec.set_radius = as_positive(j["set_radius"], join(path, "set_radius"));
  if (j.contains("domain_radius")) spec.domain_radius = as_positive(j["domain_radius"], join(path, "domain_radius"));
  return spec;
}

MethodSpec parse_method(const json& j, const std::string& path) {
  reject_unknown(j, path,
                 {"name", "p", "T", "gamma", "band_scale", "gamma_plus_cap", "newton_tol", "newton_max_iter"});
  MethodSpec m;
  if (!j.contains("name")) field_error(join(path, "name"), "required");
  const std::string name = as_string(j["name"], join(path, "name"));
  if (name == "mp") {
    m.kind = MethodKind::kMirrorProx;
  } else if (name == "homp_p2") {
    m.kind = MethodKind::kHompP2;
  } else if (name == "homp_general") {
    m.kind = MethodKind::kHompGeneral;
  } else {
    field_error(join(path, "name"), "expected mp, homp_p2 or homp_general");
  }
  if (j.contains("p")) {
    if (m.kind != MethodKind::kHompGeneral) field_error(join(path, "p"), "only homp_general takes an order");
    m.p = as_int(j["p"], join(path, "p"), 2);
  } else if (m.kind == MethodKind::kHompGeneral) {
    field_error(join(path, "p"), "required for homp_general");
  }
  if (!j.contains("T")) field_error(join(path, "T"), "required");
  const json& t = j["T"];
  const std::string tpath = join(path, "T");
  if (t.is_array()) {
    if (t.empty()) field_error(tpath, "T grid must not be empty");
    for (std::size_t i = 0; i < t.size(); ++i) m.T.push_back(as_int(t[i], fmt::format("{}[{}]", tpath, i), 1));
  } else {
    m.T.push_back(as_int(t, tpath, 1));
  }
  for (std::size_t i = 1; i < m.T.size(); ++i) {
    if (m.T[i] <= m.T[i - 1]) field_error(tpath, "T grid must be strictly increasing");
  }
  if (j.contains("gamma")) {
    if (m.kind != MethodKind::kMirrorProx) field_error(join(path, "gamma"), "only mp takes a fixed step");
    m.gamma = as_positive(j["gamma"], join(path, "gamma"));
  }
  const bool homp = m.kind != MethodKind::kMirrorProx;
  for (const char* key : {"band_scale", "gamma_plus_cap", "newton_tol", "newton_max_iter"}) {
    if (j.contains(key) && !homp) field_error(join(path, key), "only homp methods take this setting");
  }
  if (j.contains("band_scale")) m.band_scale = as_positive(j["band_scale"], join(path, "band_scale"));
  if (j.contains("gamma_plus_cap")) m.gamma_plus_cap = as_positive(j["gamma_plus_cap"], join(path, "gamma_plus_cap"));
  if (j.contains("newton_tol")) m.newton_tol = as_positive(j["newton_tol"], join(path, "newton_tol"));
  if (j.contains("newton_max_iter")) m.newton_max_iter = as_int(j["newton_max_iter"], join(path, "newton_max_iter"), 1);
  return m;
}

std::string run_id(const std::string& method, int T) { return fmt::format("method={} T={}", method, T); }

SolverReport run_method(const TestProblem& problem, const MethodSpec& method, int T, const Vector& z1,
                        int record_every) {
  switch (method.kind) {
    case MethodKind::kMirrorProx: {
      MirrorProxConfig cfg;
      cfg.iterations = T;
      cfg.record_every = record_every;
      cfg.step_gamma = method.gamma ? *method.gamma
                                    : 1.0 / std::max(problem.smoothness.constant(1).value_or(0.0), kLipschitzFloor);
      return mp_run(problem.field, problem.geometry, problem.set, z1, cfg);
    }
    case MethodKind::kHompP2:
    case MethodKind::kHompGeneral: {
      SolverConfig cfg;
      cfg.p = method.kind == MethodKind::kHompP2 ? 2 : method.p;
      cfg.iterations = T;
      cfg.newton_tol = method.newton_tol;
      cfg.newton_max_iter = method.newton_max_iter;
      cfg.band_scale = method.band_scale;
      cfg.gamma_plus_cap = method.gamma_plus_cap;
      cfg.record_every = record_every;
      if (method.kind == MethodKind::kHompP2) return homp_p2_run(problem.field, problem.smoothness, z1, cfg);
      return homp_general_run(problem.field, cfg.p, problem.smoothness, z1, cfg);
    }
  }
  throw ConfigurationError("unknown method");
}

void validate_methods(const ExperimentConfig& config, const TestProblem& problem) {
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    const MethodSpec& m = config.methods[i];
    const std::string path = fmt::format("methods[{}]", i);
    if (m.kind == MethodKind::kMirrorProx) {
      if (!m.gamma && !problem.smoothness.constant(1)) field_error(join(path, "gamma"), "required: problem declares no L1");
      continue;
    }
    if (!problem.set.is_whole_space() || problem.geometry.kind() != BregmanKind::kSquaredEuclidean) {
      field_error(join(path, "name"), "homp methods need an unconstrained problem with Euclidean geometry");
    }
    const int p = m.kind == MethodKind::kHompP2 ? 2 : m.p;
    if (p > problem.field.max_order() + 1) {
      field_error(join(path, "p"), fmt::format("problem '{}' supplies derivatives up to order {}", problem.name,
                                               problem.field.max_order()));
    }
    if (!m.band_scale && !problem.smoothness.constant(p)) {
      field_error(join(path, "band_scale"), fmt::format("required: problem declares no L{}", p));
    }
  }
}

std::vector<double> running_merit(const SolverReport& report, const ReferenceRegion& region) {
  std::vector<double> out;
  out.reserve(report.records.size());
  for (const auto& [t, value] : merit_series(report.records, region, 1)) out.push_back(value);
  return out;
}

void check_monitors(const ExperimentConfig& config, const MonitorFlags& flags, const TestProblem& problem,
                    const Vector& z1, const SolverReport& report, const std::vector<Vector>& refs, CellResult& cell) {
  const std::string id = run_id(cell.method, cell.T);
  // The quarter-weighted sum bound is a HOMP lemma. Mirror Prox at gamma = 1/L1
  // only satisfies it when L1 is loose, so check mode does not force it there.
  const bool sum_bound = flags.sum_bound && (report.method != "mp" || config.monitors.sum_bound);
  if (sum_bound) {
    for (std::size_t k = 0; k < refs.size(); ++k) {
      const SumBoundCheck c = sum_bound_monitor(report.records, problem.geometry, z1, refs[k]);
      if (!c.satisfied) {
        cell.violations.push_back(
            fmt::format("sum_bound {} reference={} lhs={:.17g} rhs={:.17g}", id, k, c.lhs, c.rhs));
      }
    }
  }
  // The field-norm and step-sum bounds are stated for the p = 2 step-size rule.
  if (flags.trajectory_bound && report.order == 2 && problem.solution && problem.smoothness.constant(1) &&
      problem.geometry.kind() == BregmanKind::kSquaredEuclidean) {
    const TrajectoryReport tr = trajectory_bound_monitor(report.records, z1, *problem.solution,
                                                         *problem.smoothness.constant(1));
    for (const TrajectoryViolation& v : tr.violations) {
      cell.violations.push_back(
          fmt::format("trajectory_bound {} t={} {}={:.17g} bound={:.17g}", id, v.t, v.what, v.value, v.bound));
    }
  }
  if (flags.band && report.method != "mp") {
    const BandReport br = band_monitor(report);
    for (int t : br.band_violations) cell.violations.push_back(fmt::format("band {} t={}", id, t));
    for (int t : br.cap_violations) cell.violations.push_back(fmt::format("gamma_cap {} t={}", id, t));
  }
}

/// Property suite of the `check` subcommand: monotonicity, Jacobian spectra,
/// and the residual of the declared solution.
std::vector<std::string> property_checks(const TestProblem& problem, const Vector& z1, std::uint64_t seed,
                                         ordered_json& out) {
  std::vector<std::string> violations;
  const std::vector<Vector> points = reference_points(problem, z1, 1000, seed ^ 0x6d6f6e6fULL);
  double min_inner = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < points.size(); k += 2) {
    const Vector& u = points[k];
    const Vector& v = points[k + 1];
    min_inner = std::min(min_inner, (problem.field.eval(u) - problem.field.eval(v)).dot(u - v));
  }
  out["monotone_min_inner"] = min_inner;
  if (min_inner < -1e-10) violations.push_back(fmt::format("monotonicity min_inner={:.17g}", min_inner));

  double min_sym = std::numeric_limits<double>::infinity();
  bool spectrum_ok = true;
  for (std::size_t k = 0; k < std::min<std::size_t>(points.size(), 20); ++k) {
    const SpectrumReport sr = jacobian_spectrum_check(problem.field.jacobian(points[k]));
    min_sym = std::min(min_sym, sr.min_symmetric_eigenvalue);
    spectrum_ok = spectrum_ok && sr.ok() && sr.min_symmetric_eigenvalue >= -1e-10;
  }
  out["jacobian_min_symmetric_eigenvalue"] = min_sym;
  if (!spectrum_ok) violations.push_back(fmt::format("jacobian_spectrum min_symmetric={:.17g}", min_sym));

  if (problem.solution) {
    double residual = 0.0;
    if (problem.set.is_whole_space()) {
      residual = fnorm_residual(problem.field, *problem.solution);
    } else {
      const Vector f = problem.field.eval(*problem.solution);
      for (const Vector& z : points) residual = std::max(residual, f.dot(*problem.solution - z));
    }
    out["solution_residual"] = residual;
    if (residual > 1e-10) violations.push_back(fmt::format("solution_residual {:.17g}", residual));
  }
  return violations;
}

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("HOMP_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "homp_out";
}

}  // namespace

std::string MethodSpec::label() const {
  switch (kind) {
    case MethodKind::kMirrorProx:
      return "mp";
    case MethodKind::kHompP2:
      return "homp_p2";
    case MethodKind::kHompGeneral:
      return fmt::format("homp_general_p{}", p);
  }
  return "unknown";
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to line / column.
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
    const std::size_t line_start = text.rfind('\n', pos == 0 ? 0 : pos - 1);
    const std::size_t column = line_start == std::string::npos ? pos + 1 : pos - line_start;
    throw ConfigurationError(fmt::format("config: syntax error at line {}, column {}: {}", line, column, e.what()));
  }
  reject_unknown(root, "", {"problem", "methods", "z1", "output", "monitors", "seed", "record_every"});
  ExperimentConfig config;
  if (root.contains("seed")) config.seed = as_seed(root["seed"], "seed");
  if (!root.contains("problem")) field_error("problem", "required");
  bool problem_seed = false;
  config.problem = parse_problem(root["problem"], problem_seed);
  if (!problem_seed) config.problem.seed = config.seed;

  if (!root.contains("methods")) field_error("methods", "required");
  const json& methods = root["methods"];
  if (!methods.is_array()) field_error("methods", "expected an array");
  if (methods.empty()) field_error("methods", "at least one method is required");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    config.methods.push_back(parse_method(methods[i], fmt::format("methods[{}]", i)));
  }

  if (root.contains("z1")) {
    const json& z = root["z1"];
    if (z.is_string()) {
      const std::string s = z.get<std::string>();
      if (s == "origin") {
        config.start = StartPolicy::kOrigin;
      } else if (s == "unit") {
        config.start = StartPolicy::kUnit;
      } else if (s == "random") {
        config.start = StartPolicy::kRandom;
      } else {
        field_error("z1", "expected origin, unit, random or an explicit vector");
      }
    } else {
      config.start = StartPolicy::kExplicit;
      config.start_point = as_vector(z, "z1");
    }
  }
  if (root.contains("output")) config.output = as_string(root["output"], "output");
  if (root.contains("monitors")) {
    const json& m = root["monitors"];
    reject_unknown(m, "monitors", {"sum_bound", "trajectory_bound", "band", "reference_points"});
    if (m.contains("sum_bound")) config.monitors.sum_bound = as_bool(m["sum_bound"], "monitors.sum_bound");
    if (m.contains("trajectory_bound"))
      config.monitors.trajectory_bound = as_bool(m["trajectory_bound"], "monitors.trajectory_bound");
    if (m.contains("band")) config.monitors.band = as_bool(m["band"], "monitors.band");
    if (m.contains("reference_points"))
      config.monitors.reference_points = as_int(m["reference_points"], "monitors.reference_points", 1);
  }
  if (root.contains("record_every")) config.record_every = as_int(root["record_every"], "record_every", 1);
  try {
    config.problem.validate();
  } catch (const ConfigurationError& e) {
    field_error("problem", e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError(fmt::format("config: cannot read '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Vector resolve_start(const ExperimentConfig& config, const TestProblem& problem) {
  const int n = problem.dim();
  Vector z;
  switch (config.start) {
    case StartPolicy::kOrigin:
      z = Vector::Zero(n);
      break;
    case StartPolicy::kUnit:
      z = default_start(problem);
      break;
    case StartPolicy::kExplicit:
      if (config.start_point.size() != n) {
        field_error("z1", fmt::format("has length {}, problem dimension is {}", config.start_point.size(), n));
      }
      z = config.start_point;
      break;
    case StartPolicy::kRandom: {
      const std::vector<Vector> pts = reference_points(problem, default_start(problem), 1, config.seed ^ 0x7a31ULL);
      z = pts.front();
      break;
    }
  }
  if (!problem.set.contains(z, 1e-12)) field_error("z1", "start point is outside the feasible set");
  if (problem.geometry.kind() == BregmanKind::kNegativeEntropy && (z.array() <= 0.0).any()) {
    field_error("z1", "entropy geometry needs a start point in the relative interior");
  }
  return z;
}

ReferenceRegion merit_region(const TestProblem& problem, const Vector& z1) {
  if (problem.set.is_bounded()) return ReferenceRegion::constraint_set(problem.set);
  return ReferenceRegion::default_for(z1, problem.solution);
}

std::vector<Vector> reference_points(const TestProblem& problem, const Vector& z1, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  if (!problem.set.is_bounded()) {
    const Vector center = problem.solution ? *problem.solution : z1;
    const double radius = reference_radius(z1, problem.solution);
    for (int k = 0; k < count; ++k) out.push_back(rng.in_ball(center, radius));
    return out;
  }
  for (int k = 0; k < count; ++k) {
    Vector z(problem.dim());
    int offset = 0;
    for (const SetBlock& block : problem.set.blocks()) {
      const int m = block_dim(block);
      if (std::holds_alternative<Simplex>(block)) {
        // Normalized exponentials are uniform on the simplex.
        Vector e(m);
        for (int i = 0; i < m; ++i) e[i] = -std::log(1.0 - rng.uniform());
        z.segment(offset, m) = e / e.sum();
      } else if (const auto* ball = std::get_if<Ball>(&block)) {
        z.segment(offset, m) = rng.in_ball(ball->center, ball->radius);
      } else if (const auto* box = std::get_if<Box>(&block)) {
        for (int i = 0; i < m; ++i) z[offset + i] = rng.uniform(box->lower[i], box->upper[i]);
      }
      offset += m;
    }
    out.push_back(std::move(z));
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const SolverReport& report,
                          const std::vector<double>& merit) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << kCsvHeader << '\n';
  for (std::size_t k = 0; k < report.records.size(); ++k) {
    const IterateRecord& r = report.records[k];
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.t, format_double(r.gamma), format_double(r.step_norm),
                       format_double(r.eg_norm), to_string(r.branch), r.inner_iters,
                       format_double(r.implicit_residual), format_double(r.fnorm), format_double(merit.at(k)));
  }
  if (!out) throw Error(fmt::format("write to '{}' failed", path.string()));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const TestProblem problem = make_problem(config.problem);
  validate_methods(config, problem);
  const Vector z1 = resolve_start(config, problem);
  const ReferenceRegion region = merit_region(problem, z1);

  if (options.mode == Mode::kSolve && (config.methods.size() != 1 || config.methods.front().T.size() != 1)) {
    field_error("methods", "solve takes exactly one method with a single T");
  }
  MonitorFlags flags = config.monitors;
  if (options.mode == Mode::kCheck) flags = MonitorFlags{true, true, true, config.monitors.reference_points};
  const std::vector<Vector> refs =
      flags.sum_bound ? reference_points(problem, z1, flags.reference_points, config.seed ^ 0x726566ULL)
                      : std::vector<Vector>{};

  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec || !std::filesystem::is_directory(options.out_dir)) {
    throw ConfigurationError(fmt::format("output directory '{}' is not writable", options.out_dir.string()));
  }

  struct Cell {
    const MethodSpec* method;
    int T;
  };
  std::vector<Cell> cells;
  for (const MethodSpec& m : config.methods)
    for (int T : m.T) cells.push_back({&m, T});

  ExperimentResult result;
  result.cells.resize(cells.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (std::size_t idx = next.fetch_add(1); idx < cells.size(); idx = next.fetch_add(1)) {
      const Cell& c = cells[idx];
      CellResult& cell = result.cells[idx];
      cell.method = c.method->label();
      cell.T = c.T;
      cell.csv = options.mode == Mode::kSolve ? "trajectory.csv" : fmt::format("{}_T{}.csv", cell.method, c.T);
      try {
        const SolverReport report = run_method(problem, *c.method, c.T, z1, config.record_every);
        const std::vector<double> merit = running_merit(report, region);
        write_trajectory_csv(options.out_dir / cell.csv, report, merit);
        cell.iterations = report.iterations();
        cell.gamma_total = report.gamma_total;
        cell.merit = merit.empty() ? 0.0 : merit.back();
        cell.fnorm_bar = fnorm_residual(problem.field, report.z_bar);
        cell.converged = report.converged;
        if (problem.minmax && problem.minmax->best_response_x && problem.minmax->best_response_y) {
          cell.duality_gap = duality_gap(*problem.minmax, problem.minmax->x_part(report.z_bar),
                                         problem.minmax->y_part(report.z_bar));
        }
        check_monitors(config, flags, problem, z1, report, refs, cell);
      } catch (const Error& e) {
        cell.failure = fmt::format("{}: {}", run_id(cell.method, c.T), e.what());
      } catch (const std::exception& e) {
        cell.failure = fmt::format("{}: unexpected error: {}", run_id(cell.method, c.T), e.what());
      }
      if (!options.quiet) {
        std::lock_guard lock(log_mutex);
        fmt::print(stderr, "[homp] {} T={} done{}\n", cell.method, c.T, cell.failure.empty() ? "" : " (failed)");
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, static_cast<int>(std::max<std::size_t>(cells.size(), 1)));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  // Single writer from here on, in config order.
  ordered_json summary;
  summary["problem"] = {{"kind", to_string(config.problem.kind)},
                        {"name", problem.name},
                        {"dim", problem.dim()},
                        {"seed", config.problem.seed}};
  summary["z1"] = std::vector<double>(z1.data(), z1.data() + z1.size());
  summary["merit_region"] = region.describe();
  ordered_json runs = ordered_json::array();
  for (const CellResult& cell : result.cells) {
    ordered_json r;
    r["method"] = cell.method;
    r["T"] = cell.T;
    r["csv"] = cell.csv;
    if (!cell.failure.empty()) {
      r["failure"] = cell.failure;
      result.failures.push_back(cell.failure);
    } else {
      r["iterations"] = cell.iterations;
      r["Gamma_T"] = cell.gamma_total;
      r["merit"] = cell.merit;
      r["fnorm_bar"] = cell.fnorm_bar;
      if (cell.duality_gap) r["duality_gap"] = *cell.duality_gap;
      r["converged"] = cell.converged;
    }
    r["violations"] = cell.violations;
    result.violations.insert(result.violations.end(), cell.violations.begin(), cell.violations.end());
    runs.push_back(std::move(r));
  }
  summary["runs"] = std::move(runs);

  ordered_json slopes = ordered_json::object();
  for (const MethodSpec& m : config.methods) {
    std::vector<RatePoint> grid;
    bool usable = m.T.size() >= 3;
    for (const CellResult& cell : result.cells) {
      if (cell.method != m.label()) continue;
      if (!cell.failure.empty() || !(cell.merit > 0.0)) usable = false;
      grid.push_back({static_cast<double>(cell.T), cell.merit});
    }
    if (!usable) continue;
    const RateFit fit = fit_rate(grid);
    result.slopes.push_back({m.label(), fit});
    slopes[m.label()] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
  }
  summary["slopes"] = std::move(slopes);

  if (options.mode == Mode::kCheck) {
    ordered_json props;
    const std::vector<std::string> v = property_checks(problem, z1, config.seed, props);
    summary["property_checks"] = std::move(props);
    result.violations.insert(result.violations.end(), v.begin(), v.end());
  }
  summary["monitors"] = {{"sum_bound", flags.sum_bound},
                         {"trajectory_bound", flags.trajectory_bound},
                         {"band", flags.band},
                         {"violations", result.violations}};
  result.exit_status = !result.failures.empty() ? 3 : (!result.violations.empty() ? 4 : 0);
  summary["exit_status"] = result.exit_status;

  std::ofstream out(options.out_dir / "summary.json", std::ios::binary | std::ios::trunc);
  out << summary.dump(2) << '\n';
  if (!out) throw Error("writing summary.json failed");
  return result;
}

std::vector<SlopeEntry> fit_csv_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw UsageError(fmt::format("'{}' is not a directory", dir.string()));
  static const std::regex name_re(R"(^(.+)_T(\d+)\.csv$)");
  std::map<std::string, std::vector<RatePoint>> groups;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const std::filesystem::path& file : files) {
    std::smatch m;
    const std::string name = file.filename().string();
    if (!std::regex_match(name, m, name_re)) continue;
    std::ifstream in(file);
    std::string line;
    std::string last;
    if (!std::getline(in, line) || line != kCsvHeader) {
      throw ConfigurationError(fmt::format("{}: line 1: unexpected CSV header", name));
    }
    while (std::getline(in, line))
      if (!line.empty()) last = line;
    if (last.empty()) continue;
    const std::size_t comma = last.rfind(',');
    const double merit = std::strtod(last.c_str() + comma + 1, nullptr);
    groups[m[1].str()].push_back({std::stod(m[2].str()), merit});
  }
  std::vector<SlopeEntry> out;
  ordered_json summary = ordered_json::object();
  for (auto& [method, grid] : groups) {
    std::sort(grid.begin(), grid.end(), [](const RatePoint& a, const RatePoint& b) { return a.T < b.T; });
    if (grid.size() < 3) continue;
    const RateFit fit = fit_rate(grid);
    out.push_back({method, fit});
    summary[method] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
  }
  if (out.empty()) throw UsageError(fmt::format("no method in '{}' has 3 or more <method>_T<T>.csv files", dir.string()));
  std::ofstream f(dir / "rate.json", std::ios::binary | std::ios::trunc);
  f << summary.dump(2) << '\n';
  return out;
}

int run_cli(const CliRequest& request, std::ostream& out, std::ostream& err) {
  try {
    if (request.command == "rate") {
      std::filesystem::path dir = default_out_dir();
      if (request.input_dir) {
        dir = *request.input_dir;
      } else if (request.out_dir) {
        dir = *request.out_dir;
      }
      for (const SlopeEntry& s : fit_csv_directory(dir)) {
        if (!request.quiet) out << fmt::format("{} slope={:.6f} r2={:.6f}\n", s.method, s.fit.slope, s.fit.r_squared);
      }
      return 0;
    }
    Mode mode;
    if (request.command == "solve") {
      mode = Mode::kSolve;
    } else if (request.command == "compare") {
      mode = Mode::kCompare;
    } else if (request.command == "check") {
      mode = Mode::kCheck;
    } else {
      err << fmt::format("unknown command '{}'\n", request.command);
      return 2;
    }
    if (!request.config_path) {
      err << "--config is required\n";
      return 2;
    }
    ExperimentConfig config = load_config(*request.config_path);
    if (request.seed) config.seed = *request.seed;
    RunOptions options;
    options.mode = mode;
    options.jobs = request.jobs;
    options.quiet = request.quiet;
    options.out_dir = request.out_dir ? std::filesystem::path(*request.out_dir)
                      : config.output ? std::filesystem::path(*config.output)
                                      : default_out_dir();
    const ExperimentResult result = run_experiment(config, options);
    if (!request.quiet) {
      for (const CellResult& c : result.cells) {
        if (c.failure.empty()) {
          out << fmt::format("{} T={} iterations={} Gamma_T={:.6g} merit={:.6g}\n", c.method, c.T, c.iterations,
                             c.gamma_total, c.merit);
        }
      }
      for (const SlopeEntry& s : result.slopes) {
        out << fmt::format("{} slope={:.6f} r2={:.6f}\n", s.method, s.fit.slope, s.fit.r_squared);
      }
    }
    for (const std::string& f : result.failures) err << "numerical failure: " << f << '\n';
    for (const std::string& v : result.violations) err << "monitor violation: " << v << '\n';
    return result.exit_status;
  } catch (const ConfigurationError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace homp
