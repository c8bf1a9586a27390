#include "homp/gamma_search.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "homp/linalg.hpp"

namespace homp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double probe_target(const ResolventStep& step, double gamma, double band_scale) {
  const double s = (step.zhat(gamma) - step.base()).norm();
  return s > 0.0 ? 1.0 / (12.0 * band_scale * s) : kInf;
}

void check_band_scale(double band_scale) {
  if (!(band_scale > 0.0) || !std::isfinite(band_scale)) {
    throw ConfigurationError(fmt::format("band_scale must be finite and > 0, got {}", band_scale));
  }
}

}  // namespace

double q_value(const ResolventStep& step, double gamma, double band_scale) {
  check_band_scale(band_scale);
  if (!(gamma > 0.0)) throw UsageError(fmt::format("q_value: gamma must be > 0, got {}", gamma));
  if (step.fnorm() == 0.0) return kInf;
  const int n = static_cast<int>(step.base().size());
  const Matrix system = Matrix::Identity(n, n) / gamma + step.jacobian();
  const Vector x = linalg::solve(system, step.field_value());
  return 1.0 / (12.0 * band_scale * x.norm());
}

double q_value(const VectorField& field, const Vector& z, double gamma, double band_scale) {
  return q_value(ResolventStep(field, z), gamma, band_scale);
}

double sigma_min(const Matrix& m) { return linalg::sigma_min(m); }

std::string GammaSearchState::dump() const {
  std::string out = fmt::format(
      "GammaSearchState{{gamma_minus_init={:.17g}, gamma_plus_init={:.17g}, gamma_minus={:.17g}, "
      "gamma_plus={:.17g}, gamma_bar={:.17g}, delta={:.17g}, C={:.17g}, C_bar={:.17g}, N={}, probes=[",
      gamma_minus_init, gamma_plus_init, gamma_minus, gamma_plus, gamma_bar, delta, C, C_bar, N);
  for (std::size_t k = 0; k < history.size(); ++k) {
    if (k) out += ", ";
    out += fmt::format("({:.17g}, {:.17g}, {})", history[k].gamma, history[k].target,
                       history[k].raised_lower ? "lower" : "upper");
  }
  out += "]}";
  return out;
}

SearchConstants search_constants(const ResolventStep& step, double band_scale) {
  check_band_scale(band_scale);
  SearchConstants c;
  const double sigma = linalg::sigma_min(step.jacobian());
  const double fnorm = step.fnorm();
  if (fnorm == 0.0) {
    c.delta = kInf;
    c.C = 0.0;
    c.C_bar = 1.0;
    return c;
  }
  c.delta = sigma / (12.0 * band_scale * fnorm);
  if (c.delta > 0.0) {
    const double jnorm = linalg::operator_norm(step.jacobian());
    const double ratio = (1.0 / c.delta + jnorm) / (12.0 * band_scale * sigma * fnorm);
    c.C = ratio * ratio * ratio / (c.delta * c.delta);
  } else {
    c.C = kInf;
  }
  c.C_bar = std::max(c.C, 1.0);
  return c;
}

int search_budget(const SearchConstants& constants, double gamma_minus, double gamma_plus, int T) {
  if (!(constants.delta > 0.0) || !std::isfinite(constants.C_bar)) return kMaxSearchSteps;
  const double length = gamma_plus - gamma_minus;
  if (!(length > 0.0)) return 4;
  const double arg = 100.0 * constants.C_bar * length * std::max(T, 1) / constants.delta;
  if (!std::isfinite(arg)) return kMaxSearchSteps;
  const double steps = std::ceil(std::log2(arg));
  if (!(steps > 0.0)) return 4;
  return static_cast<int>(std::min<double>(steps + 4.0, kMaxSearchSteps));
}

GammaSearchResult binary_search_gamma(const ResolventStep& step, double gamma_minus_init, double gamma_plus_init,
                                      int T, double band_scale) {
  check_band_scale(band_scale);
  if (!(gamma_minus_init >= 0.0) || !(gamma_plus_init >= gamma_minus_init) || !std::isfinite(gamma_plus_init)) {
    throw BracketError(fmt::format("binary_search_gamma: invalid interval [{}, {}]", gamma_minus_init, gamma_plus_init));
  }

  GammaSearchState state;
  state.gamma_minus_init = gamma_minus_init;
  state.gamma_plus_init = gamma_plus_init;

  // Entry check: the lower end must sit at or below its target, the upper end
  // at or above it. gamma = 0 is always a valid lower end.
  constexpr double kSlack = 1e-12;
  const double lower_target = gamma_minus_init > 0.0 ? probe_target(step, gamma_minus_init, band_scale) : kInf;
  const double upper_target = probe_target(step, gamma_plus_init, band_scale);
  bool lower_ok = gamma_minus_init <= lower_target * (1.0 + kSlack);
  bool upper_ok = gamma_plus_init >= upper_target * (1.0 - kSlack);
  if (gamma_minus_init == gamma_plus_init) {
    // Zero-length bracket: acceptable when the point already meets the output
    // band 12/16 target <= gamma <= 12/8 target.
    const bool in_band = gamma_plus_init >= 0.75 * upper_target * (1.0 - kSlack) &&
                         gamma_plus_init <= 1.5 * upper_target * (1.0 + kSlack);
    lower_ok = upper_ok = in_band;
  }
  if (!lower_ok || !upper_ok) {
    throw BracketError(fmt::format(
        "binary_search_gamma: invalid bracket: gamma_minus={:.17g} (target {:.17g}, residual {:.3e}), "
        "gamma_plus={:.17g} (target {:.17g}, residual {:.3e})",
        gamma_minus_init, lower_target, gamma_minus_init - lower_target, gamma_plus_init, upper_target,
        gamma_plus_init - upper_target));
  }

  const SearchConstants constants = search_constants(step, band_scale);
  state.delta = constants.delta;
  state.C = constants.C;
  state.C_bar = constants.C_bar;
  state.N = search_budget(constants, gamma_minus_init, gamma_plus_init, T);

  double lo = gamma_minus_init;
  double hi = gamma_plus_init;
  double mid = 0.5 * (lo + hi);
  for (int k = 0; k < state.N; ++k) {
    const double target = probe_target(step, mid, band_scale);
    const bool raise = mid <= target;
    state.history.push_back({mid, target, raise});
    if (raise) {
      lo = mid;
    } else {
      hi = mid;
    }
    mid = 0.5 * (lo + hi);
  }
  state.gamma_minus = lo;
  state.gamma_plus = hi;
  state.gamma_bar = mid;
  return {hi, std::move(state)};
}

GammaSearchResult binary_search_gamma(const VectorField& field, const Vector& z, double gamma_minus_init,
                                      double gamma_plus_init, int T, double band_scale) {
  return binary_search_gamma(ResolventStep(field, z), gamma_minus_init, gamma_plus_init, T, band_scale);
}

}  // namespace homp
