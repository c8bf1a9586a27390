#include "homp/higher_order.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace homp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double phi(double gamma, double step_norm, int p) { return gamma * std::pow(step_norm, p - 1); }

struct RunSetup {
  int p;
  double band_scale;
  double cap;
  double f1norm;
};

RunSetup prepare(const VectorField& field, int p, const SmoothnessSpec& smoothness, const Vector& z1,
                 const SolverConfig& config) {
  config.validate();
  smoothness.validate();
  if (z1.size() != field.dim()) throw ConfigurationError("homp: z1 dimension does not match the field");
  if (!z1.allFinite()) throw ConfigurationError("homp: z1 has non-finite coordinates");
  RunSetup setup;
  setup.p = p;
  setup.band_scale = config.band_scale ? *config.band_scale : default_band_scale(p, smoothness);
  if (!(setup.band_scale > 0.0) || !std::isfinite(setup.band_scale)) {
    throw ConfigurationError(fmt::format("homp: band_scale must be finite and > 0, got {}", setup.band_scale));
  }
  setup.cap = config.gamma_plus_cap ? *config.gamma_plus_cap : default_gamma_cap(p, config.iterations);
  if (!(setup.cap > 0.0) || !std::isfinite(setup.cap)) {
    throw ConfigurationError(fmt::format("homp: gamma_plus_cap must be finite and > 0, got {}", setup.cap));
  }
  setup.f1norm = field.eval(z1).norm();
  if (!std::isfinite(setup.f1norm)) throw NumericalFailure("homp: non-finite F(z1)", 1);
  return setup;
}

/// Appends the record for (gamma, zhat) and advances z by the extragradient step.
void commit(const VectorField& field, SolverReport& report, Vector& weighted, Vector& z, const ResolventStep& step,
            int t, double gamma, Vector zhat, Branch branch, int inner, double abs_residual, int record_every) {
  Vector fzhat = field.eval(zhat);
  if (!fzhat.allFinite()) throw NumericalFailure(fmt::format("homp: non-finite F(zhat_t) at t={}", t), t);
  Vector z_next = z - gamma * fzhat;
  if (!z_next.allFinite()) throw NumericalFailure(fmt::format("homp: non-finite z_(t+1) at t={}", t), t);

  IterateRecord rec;
  rec.t = t;
  rec.z = z;
  rec.step_norm = (zhat - z).norm();
  rec.eg_norm = (z_next - zhat).norm();
  rec.zhat = std::move(zhat);
  rec.z_next = z_next;
  rec.field_at_zhat = std::move(fzhat);
  rec.gamma = gamma;
  rec.fnorm = step.fnorm();
  rec.branch = branch;
  rec.inner_iters = inner;
  rec.implicit_residual = abs_residual / (1.0 + gamma * step.fnorm());
  if ((t - 1) % record_every == 0) report.diagnostics["fnorm"].emplace_back(t, rec.fnorm);

  weighted += gamma * rec.zhat;
  report.gamma_total += gamma;
  report.records.push_back(std::move(rec));
  z = std::move(z_next);
}

void finish(SolverReport& report, const Vector& weighted) {
  report.z_bar = report.records.empty() ? report.z1 : Vector(weighted / report.gamma_total);
}

bool converged(const ResolventStep& step, const RunSetup& setup) {
  return step.fnorm() <= kConvergenceTol * (1.0 + setup.f1norm);
}

/// Result of one oracle probe during the step-size search.
struct Probe {
  double gamma = 0.0;
  Vector zhat;
  double residual = 0.0;
  int newton_iters = 0;
  double step_norm = 0.0;
};

class GeneralOracle {
 public:
  GeneralOracle(const VectorField& field, int p, const ResolventStep& step, const SolverConfig& config)
      : field_(field), p_(p), step_(step), config_(config) {}

  /// Probes gamma; on oracle failure moves gamma halfway toward `floor` and
  /// retries, up to kOracleRetries times.
  Probe probe(double gamma, double floor) {
    for (int attempt = 0;; ++attempt) {
      try {
        ImplicitStep s = implicit_step_general(field_, p_, step_, gamma, config_.newton_tol, config_.newton_max_iter);
        ++probes_;
        newton_ += s.iterations;
        Probe out;
        out.gamma = gamma;
        out.step_norm = (s.zhat - step_.base()).norm();
        out.zhat = std::move(s.zhat);
        out.residual = s.residual;
        out.newton_iters = s.iterations;
        return out;
      } catch (const OracleFailure&) {
        ++probes_;
        if (attempt >= kOracleRetries) throw;
        gamma = floor + 0.5 * (gamma - floor);
      }
    }
  }

  int probes() const { return probes_; }
  int newton_iterations() const { return newton_; }

 private:
  const VectorField& field_;
  int p_;
  const ResolventStep& step_;
  const SolverConfig& config_;
  int probes_ = 0;
  int newton_ = 0;
};

}  // namespace

void SolverConfig::validate() const {
  if (p < 2) throw ConfigurationError(fmt::format("SolverConfig: p must be >= 2, got {}", p));
  if (iterations < 1) throw ConfigurationError("SolverConfig: iterations must be >= 1");
  if (!(newton_tol > 0.0)) throw ConfigurationError("SolverConfig: newton_tol must be > 0");
  if (newton_max_iter < 0) throw ConfigurationError("SolverConfig: newton_max_iter must be >= 0");
  if (band_scale && !(*band_scale > 0.0)) throw ConfigurationError("SolverConfig: band_scale must be > 0");
  if (gamma_plus_cap && !(*gamma_plus_cap > 0.0)) throw ConfigurationError("SolverConfig: gamma_plus_cap must be > 0");
  if (record_every < 1) throw ConfigurationError("SolverConfig: record_every must be >= 1");
}

double default_band_scale(int p, const SmoothnessSpec& smoothness) {
  const auto lp = smoothness.constant(p);
  if (!lp) {
    throw ConfigurationError(fmt::format("homp: smoothness constant L_{} is required for a p={} run", p, p));
  }
  return 2.0 * std::max(*lp, kLipschitzFloor) / factorial(p);
}

double default_gamma_cap(int p, int iterations) {
  return std::pow(static_cast<double>(iterations), 0.5 * (p + 1));
}

bool in_band(double gamma, double step_norm, int p, double band_scale, double rel_tol) {
  const double value = phi(gamma, step_norm, p);
  return value >= (1.0 - rel_tol) / (16.0 * band_scale) && value <= (1.0 + rel_tol) / (8.0 * band_scale);
}

SolverReport homp_p2_run(const VectorField& field, const SmoothnessSpec& smoothness, const Vector& z1,
                         const SolverConfig& config) {
  if (config.p != 2) throw ConfigurationError(fmt::format("homp_p2_run: config.p must be 2, got {}", config.p));
  const RunSetup setup = prepare(field, 2, smoothness, z1, config);
  const double b = setup.band_scale;

  SolverReport report;
  report.method = "homp_p2";
  report.order = 2;
  report.z1 = z1;
  report.gamma_cap = setup.cap;
  report.band_scale = b;
  report.records.reserve(static_cast<std::size_t>(config.iterations));

  Vector z = z1;
  Vector weighted = Vector::Zero(z1.size());
  for (int t = 1; t <= config.iterations; ++t) {
    const ResolventStep step(field, z);
    if (converged(step, setup)) {
      report.converged = true;
      break;
    }
    try {
      const double gamma_minus = sigma_min(step.jacobian()) / (12.0 * b * step.fnorm());
      const double gamma_plus = setup.cap;
      Vector zhat_plus = step.zhat(gamma_plus);
      const double s_plus = (zhat_plus - z).norm();

      double gamma = 0.0;
      Branch branch = Branch::kSearched;
      int inner = 1;
      Vector zhat;
      if (gamma_plus < 1.0 / (8.0 * b * s_plus)) {
        gamma = gamma_plus;
        branch = Branch::kCapPlus;
        zhat = std::move(zhat_plus);
      } else if (gamma_minus >= gamma_plus) {
        gamma = gamma_minus;
        branch = Branch::kCapMinus;
        zhat = step.zhat(gamma);
        ++inner;
      } else {
        const GammaSearchResult search = binary_search_gamma(step, gamma_minus, gamma_plus, config.iterations, b);
        gamma = search.gamma;
        inner += static_cast<int>(search.state.history.size()) + 2;  // + entry checks
        zhat = step.zhat(gamma);
        ++inner;
      }
      const double residual = step.residual(zhat, gamma);
      commit(field, report, weighted, z, step, t, gamma, std::move(zhat), branch, inner, residual,
             config.record_every);
    } catch (const LinearSolveError& e) {
      throw NumericalFailure(fmt::format("homp_p2_run: linear solve failed at t={}: {}", t, e.what()), t);
    } catch (const BracketError& e) {
      throw NumericalFailure(fmt::format("homp_p2_run: step-size search failed at t={}: {}", t, e.what()), t);
    }
  }
  finish(report, weighted);
  return report;
}

SolverReport homp_general_run(const VectorField& field, int p, const SmoothnessSpec& smoothness, const Vector& z1,
                              const SolverConfig& config) {
  if (p < 2) throw ConfigurationError(fmt::format("homp_general_run: p must be >= 2, got {}", p));
  if (p > field.max_order() + 1) {
    throw UnsupportedOrderError(
        fmt::format("homp_general_run: p={} needs derivatives up to order {}, field has {}", p, p - 1,
                    field.max_order()));
  }
  const RunSetup setup = prepare(field, p, smoothness, z1, config);
  const double b = setup.band_scale;
  const double target = 1.0 / (12.0 * b);
  const double upper = 1.0 / (8.0 * b);

  SolverReport report;
  report.method = "homp_general";
  report.order = p;
  report.z1 = z1;
  report.gamma_cap = setup.cap;
  report.band_scale = b;
  report.records.reserve(static_cast<std::size_t>(config.iterations));

  Vector z = z1;
  Vector weighted = Vector::Zero(z1.size());
  for (int t = 1; t <= config.iterations; ++t) {
    const ResolventStep step(field, z);
    if (converged(step, setup)) {
      report.converged = true;
      break;
    }
    GammaSearchState state;
    try {
      GeneralOracle oracle(field, p, step, config);
      const auto fail = [&](const std::string& why) {
        throw NumericalFailure(fmt::format("homp_general_run: {} at t={}: {}", why, t, state.dump()), t);
      };

      Probe plus = oracle.probe(setup.cap, 0.0);
      state.gamma_plus_init = plus.gamma;
      Probe chosen;
      Branch branch = Branch::kSearched;
      const bool plus_ok =
          p == 2 ? plus.gamma < upper / plus.step_norm : phi(plus.gamma, plus.step_norm, p) <= upper;
      if (plus_ok) {
        chosen = std::move(plus);
        branch = Branch::kCapPlus;
      } else {
        // Lower end of the bracket: the Algorithm-3 delta for p = 2, otherwise
        // the small-gamma estimate phi ~ gamma^p |F|^{p-1}, halved until valid.
        int min_steps = 0;
        double gamma_minus;
        SearchConstants constants;
        if (p == 2) {
          constants = search_constants(step, b);
          gamma_minus = constants.delta;
        } else {
          gamma_minus = std::min(std::pow(target / std::pow(step.fnorm(), p - 1), 1.0 / p), plus.gamma);
        }
        state.gamma_minus_init = gamma_minus;
        Probe lower = oracle.probe(gamma_minus, 0.0);
        while (p != 2 && phi(lower.gamma, lower.step_norm, p) > target) {
          if (oracle.probes() >= kMaxSearchSteps) fail("could not bracket the step size");
          lower = oracle.probe(0.5 * lower.gamma, 0.0);
        }
        gamma_minus = lower.gamma;
        state.gamma_minus_init = gamma_minus;

        if (gamma_minus >= plus.gamma) {
          chosen = std::move(lower);
          branch = Branch::kCapMinus;
        } else if (p != 2 && in_band(lower.gamma, lower.step_norm, p, b, 0.0)) {
          chosen = std::move(lower);
        } else {
          if (p == 2) {
            min_steps = search_budget(constants, gamma_minus, plus.gamma, config.iterations);
            state.delta = constants.delta;
            state.C = constants.C;
            state.C_bar = constants.C_bar;
          }
          state.N = min_steps;
          double lo = gamma_minus;
          Probe hi = std::move(plus);
          bool accepted = false;
          bool hi_probed = false;
          for (int k = 0; k < kMaxSearchSteps; ++k) {
            const double mid = 0.5 * (lo + hi.gamma);
            Probe probe = oracle.probe(mid, lo);
            const double value = phi(probe.gamma, probe.step_norm, p);
            const bool raise = value <= target;
            state.history.push_back({probe.gamma, probe.step_norm > 0.0 ? probe.gamma * target / value : kInf, raise});
            if (raise) {
              lo = probe.gamma;
              if (p != 2 && in_band(probe.gamma, probe.step_norm, p, b, 0.0)) {
                chosen = std::move(probe);
                accepted = true;
                break;
              }
            } else {
              hi = std::move(probe);
              hi_probed = true;
            }
            // The upper endpoint is returned once the budget is spent, as in
            // the p = 2 search; it lies above the target by construction.
            if (k + 1 >= min_steps && hi_probed && phi(hi.gamma, hi.step_norm, p) <= upper) {
              chosen = std::move(hi);
              accepted = true;
              break;
            }
          }
          state.gamma_minus = lo;
          state.gamma_plus = accepted ? chosen.gamma : hi.gamma;
          if (!accepted) fail("bisection did not reach the step-size band");
        }
      }
      commit(field, report, weighted, z, step, t, chosen.gamma, std::move(chosen.zhat), branch,
             oracle.newton_iterations() + oracle.probes(), chosen.residual, config.record_every);
    } catch (const LinearSolveError& e) {
      throw NumericalFailure(fmt::format("homp_general_run: linear solve failed at t={}: {}", t, e.what()), t);
    } catch (const OracleFailure& e) {
      throw NumericalFailure(fmt::format("homp_general_run: implicit oracle failed at t={}: {}", t, e.what()), t);
    }
  }
  finish(report, weighted);
  return report;
}

}  // namespace homp
