#pragma once

#include <limits>
#include <optional>

#include "homp/gamma_search.hpp"
#include "homp/implicit_step.hpp"
#include "homp/report.hpp"
#include "homp/vectorfield.hpp"

namespace homp {

/// Settings for HigherOrderMirrorProx. The step-size band is expressed through
/// phi(gamma) = gamma |zhat(gamma) - z_t|^{p-1}: accepted steps satisfy
/// 1/(16 b) <= phi <= 1/(8 b) and the search targets phi = 1/(12 b), where b is
/// the band scale. With b = 2 L_p / p! this is p!/(32 L_p) <= phi <= p!/(16 L_p).
struct SolverConfig {
  int p = 2;
  int iterations = 1;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  /// Defaults to 2 max(L_p, 1e-12) / p!, i.e. max(L_2, 1e-12) for p = 2.
  std::optional<double> band_scale;
  /// Defaults to T^{(p+1)/2}.
  std::optional<double> gamma_plus_cap;
  /// Stride of the fnorm diagnostic series.
  int record_every = 1;

  void validate() const;
};

/// L_p below this is treated as this value in band arithmetic.
inline constexpr double kLipschitzFloor = 1e-12;

/// A run stops early only once |F(z_t)| <= kConvergenceTol (1 + |F(z_1)|),
/// i.e. when the field has vanished below the normal double range.
inline constexpr double kConvergenceTol = std::numeric_limits<double>::min();

/// Number of step-size halvings tried when the implicit oracle fails.
inline constexpr int kOracleRetries = 60;

double default_band_scale(int p, const SmoothnessSpec& smoothness);
double default_gamma_cap(int p, int iterations);

/// gamma |s|^{p-1} against [1/(16 b), 1/(8 b)] with relative slack rel_tol.
bool in_band(double gamma, double step_norm, int p, double band_scale, double rel_tol = 1e-9);

/// Explicit unconstrained p = 2 method: step sizes from the cap tests and the
/// bisection search, extrapolation by one linear solve, then
/// z_{t+1} = z_t - gamma_t F(zhat_t).
SolverReport homp_p2_run(const VectorField& field, const SmoothnessSpec& smoothness, const Vector& z1,
                         const SolverConfig& config);

/// Unconstrained general-order method with the Newton fixed-point oracle.
/// For p = 2 it follows the same step-size logic as homp_p2_run.
SolverReport homp_general_run(const VectorField& field, int p, const SmoothnessSpec& smoothness, const Vector& z1,
                              const SolverConfig& config);

}  // namespace homp
