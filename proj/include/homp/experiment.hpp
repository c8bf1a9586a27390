#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "homp/diagnostics.hpp"
#include "homp/problems.hpp"
#include "homp/report.hpp"

namespace homp {

enum class MethodKind { kMirrorProx, kHompP2, kHompGeneral };

struct MethodSpec {
  MethodKind kind = MethodKind::kMirrorProx;
  /// Order for homp_general.
  int p = 2;
  std::vector<int> T;
  /// Mirror Prox step; 1 / L_1 when absent.
  std::optional<double> gamma;
  std::optional<double> band_scale;
  std::optional<double> gamma_plus_cap;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;

  /// "mp", "homp_p2" or "homp_general_p<p>"; used in file names.
  std::string label() const;
};

enum class StartPolicy { kOrigin, kUnit, kExplicit, kRandom };

struct MonitorFlags {
  bool sum_bound = false;
  bool trajectory_bound = false;
  bool band = false;
  int reference_points = 10;
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<MethodSpec> methods;
  StartPolicy start = StartPolicy::kUnit;
  Vector start_point;
  std::optional<std::string> output;
  MonitorFlags monitors;
  /// Drives the random start and the monitor reference points; also the
  /// problem seed unless the problem sets its own.
  std::uint64_t seed = 0;
  int record_every = 1;
};

/// Parses a JSON config. Unknown fields are rejected. Errors carry the line
/// and column (syntax) or the offending field path (content).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Starting point chosen by the config's policy.
Vector resolve_start(const ExperimentConfig& config, const TestProblem& problem);

/// Region over which the merit is maximized: the feasible set when it is
/// bounded, otherwise the default ball around z1.
ReferenceRegion merit_region(const TestProblem& problem, const Vector& z1);

/// `count` seeded points in the R_ref ball around z* (or z1), or in the
/// feasible set when it is bounded.
std::vector<Vector> reference_points(const TestProblem& problem, const Vector& z1, int count, std::uint64_t seed);

enum class Mode { kSolve, kCompare, kCheck };

struct RunOptions {
  Mode mode = Mode::kCompare;
  std::filesystem::path out_dir;
  int jobs = 1;
  bool quiet = true;
};

struct CellResult {
  std::string method;
  int T = 0;
  std::string csv;
  int iterations = 0;
  double gamma_total = 0.0;
  double merit = 0.0;
  double fnorm_bar = 0.0;
  std::optional<double> duality_gap;
  bool converged = false;
  std::vector<std::string> violations;
  std::string failure;
};

struct SlopeEntry {
  std::string method;
  RateFit fit;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::vector<SlopeEntry> slopes;
  std::vector<std::string> violations;
  std::vector<std::string> failures;
  int exit_status = 0;
};

/// Runs every (method, T) cell, writes one CSV per cell and summary.json into
/// options.out_dir. exit_status: 0 ok, 3 numerical failure, 4 monitor violation.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Writes the trajectory CSV of one run; merit[k] is the running merit after
/// record k.
void write_trajectory_csv(const std::filesystem::path& path, const SolverReport& report,
                          const std::vector<double>& merit);

/// Fits last-row merit against T for every `<method>_T<T>.csv` in `dir`,
/// writes rate.json there.
std::vector<SlopeEntry> fit_csv_directory(const std::filesystem::path& dir);

struct CliRequest {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> input_dir;
  int jobs = 1;
  bool quiet = false;
};

/// Full command dispatch with the documented exit codes.
int run_cli(const CliRequest& request, std::ostream& out, std::ostream& err);

}  // namespace homp
