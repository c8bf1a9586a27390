#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "homp/types.hpp"

namespace homp {

/// How the step size of an iteration was chosen.
enum class Branch { kCapPlus, kCapMinus, kSearched, kFixed };

std::string_view to_string(Branch branch);
Branch branch_from_string(std::string_view name);

struct IterateRecord {
  int t = 0;
  Vector z;               // z_t
  Vector zhat;            // extrapolated point
  Vector z_next;          // z_{t+1}
  Vector field_at_zhat;   // F(zhat_t)
  double gamma = 0.0;
  double step_norm = 0.0; // |zhat_t - z_t|
  double eg_norm = 0.0;   // |z_{t+1} - zhat_t|
  double fnorm = 0.0;     // |F(z_t)|
  Branch branch = Branch::kFixed;
  int inner_iters = 0;
  /// Implicit-step residual relative to 1 + gamma |F(z_t)|.
  double implicit_residual = 0.0;
};

using Series = std::vector<std::pair<int, double>>;

struct SolverReport {
  std::string method;
  int order = 1;
  Vector z1;
  std::vector<IterateRecord> records;
  double gamma_total = 0.0;
  Vector z_bar;
  /// Run stopped early because F(z_t) vanished.
  bool converged = false;
  double gamma_cap = 0.0;
  double band_scale = 0.0;
  std::map<std::string, Series> diagnostics;

  int iterations() const { return static_cast<int>(records.size()); }
  const Vector& z_last() const { return records.empty() ? z1 : records.back().z_next; }
};

/// (1 / Gamma_T) sum_t gamma_t zhat_t.
Vector averaged_output(std::span<const IterateRecord> records);

}  // namespace homp
