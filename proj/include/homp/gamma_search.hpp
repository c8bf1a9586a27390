#pragma once

#include <string>
#include <vector>

#include "homp/implicit_step.hpp"

namespace homp {

/// q(gamma) = 1 / (12 b |(gamma^{-1} I + dF(z))^{-1} F(z)|), computed with one
/// linear solve. Returns +inf when F(z) = 0.
double q_value(const VectorField& field, const Vector& z, double gamma, double band_scale = 1.0);
double q_value(const ResolventStep& step, double gamma, double band_scale = 1.0);

/// Smallest singular value (dense SVD, n <= 200).
double sigma_min(const Matrix& m);

struct SearchProbe {
  double gamma = 0.0;
  /// 1 / (12 b |zhat(gamma) - z|), the bisection target at this probe.
  double target = 0.0;
  /// true when the probe moved the lower endpoint.
  bool raised_lower = false;
};

struct GammaSearchState {
  double gamma_minus_init = 0.0;
  double gamma_plus_init = 0.0;
  double gamma_minus = 0.0;
  double gamma_plus = 0.0;
  double gamma_bar = 0.0;
  double delta = 0.0;
  double C = 0.0;
  double C_bar = 1.0;
  int N = 0;
  std::vector<SearchProbe> history;

  std::string dump() const;
};

/// delta = sigma_min(dF) / (12 b |F|) and the Lipschitz bound C on q over
/// [delta, inf), with 12 b in place of 12 throughout.
struct SearchConstants {
  double delta = 0.0;
  double C = 0.0;
  double C_bar = 1.0;
};
SearchConstants search_constants(const ResolventStep& step, double band_scale);

/// ceil(log2(100 C_bar (gamma_plus - gamma_minus) max(T, 1) / delta)) + 4,
/// clamped to [4, 200]; 200 when delta = 0.
int search_budget(const SearchConstants& constants, double gamma_minus, double gamma_plus, int T);

inline constexpr int kMaxSearchSteps = 200;

struct GammaSearchResult {
  double gamma = 0.0;
  GammaSearchState state;
};

/// Bisection on gamma against 1 / (12 b |zhat(gamma) - z|) for the budgeted
/// number of steps; returns the final upper endpoint. Throws BracketError when
/// gamma_minus_init is above its target or gamma_plus_init below its target.
GammaSearchResult binary_search_gamma(const ResolventStep& step, double gamma_minus_init, double gamma_plus_init,
                                      int T, double band_scale = 1.0);
GammaSearchResult binary_search_gamma(const VectorField& field, const Vector& z, double gamma_minus_init,
                                      double gamma_plus_init, int T, double band_scale = 1.0);

}  // namespace homp
