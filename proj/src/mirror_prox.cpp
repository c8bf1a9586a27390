#include "homp/mirror_prox.hpp"

#include <fmt/format.h>

namespace homp {

SolverReport mp_run(const VectorField& field, const BregmanGeometry& geometry, const ConstraintSet& set,
                    const Vector& z1, const MirrorProxConfig& config) {
  if (!(config.step_gamma > 0.0)) throw ConfigurationError("mp_run: step_gamma must be > 0");
  if (config.iterations < 1) throw ConfigurationError("mp_run: iterations must be >= 1");
  if (config.record_every < 1) throw ConfigurationError("mp_run: record_every must be >= 1");
  if (set.dim() != field.dim() || z1.size() != field.dim()) {
    throw ConfigurationError("mp_run: dimension mismatch between field, set and z1");
  }
  require_supported(geometry, set);
  if (!set.contains(z1, 1e-10)) throw ConfigurationError("mp_run: z1 is not in the constraint set");

  SolverReport report;
  report.method = "mp";
  report.order = 1;
  report.z1 = z1;
  report.records.reserve(static_cast<std::size_t>(config.iterations));
  Series& fnorm_series = report.diagnostics["fnorm"];

  const double gamma = config.step_gamma;
  Vector z = z1;
  Vector weighted = Vector::Zero(z1.size());
  for (int t = 1; t <= config.iterations; ++t) {
    const Vector fz = field.eval(z);
    if (!fz.allFinite()) throw NumericalFailure(fmt::format("mp_run: non-finite F(z_t) at t={}", t), t);
    const Vector zhat = prox_step(geometry, set, z, gamma * fz);
    const Vector fzhat = field.eval(zhat);
    if (!fzhat.allFinite()) throw NumericalFailure(fmt::format("mp_run: non-finite F(zhat_t) at t={}", t), t);
    Vector z_next = prox_step(geometry, set, z, gamma * fzhat);
    if (!set.contains(zhat, 1e-9) || !set.contains(z_next, 1e-9)) {
      throw NumericalFailure(fmt::format("mp_run: iterate left the constraint set at t={}", t), t);
    }

    IterateRecord rec;
    rec.t = t;
    rec.z = z;
    rec.zhat = zhat;
    rec.z_next = z_next;
    rec.field_at_zhat = fzhat;
    rec.gamma = gamma;
    rec.step_norm = (zhat - z).norm();
    rec.eg_norm = (z_next - zhat).norm();
    rec.fnorm = fz.norm();
    rec.branch = Branch::kFixed;
    rec.inner_iters = 0;
    rec.implicit_residual = 0.0;
    if ((t - 1) % config.record_every == 0) fnorm_series.emplace_back(t, rec.fnorm);

    weighted += gamma * zhat;
    report.gamma_total += gamma;
    report.records.push_back(std::move(rec));
    z = std::move(z_next);
  }
  report.z_bar = weighted / report.gamma_total;
  return report;
}

}  // namespace homp
