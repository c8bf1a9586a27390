#include "homp/implicit_step.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "homp/linalg.hpp"

namespace homp {
namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// gamma-scaled residual of the order-(p-1) model and, on request, its Jacobian.
struct ModelEval {
  Vector residual;
  Matrix jacobian;
};

ModelEval evaluate_model(const VectorField& field, int p, const ResolventStep& base, double gamma, const Vector& w,
                         bool with_jacobian) {
  const int n = field.dim();
  const Vector& z = base.base();
  const Vector h = w - z;
  Vector model = base.field_value() + base.jacobian() * h;
  Matrix dmodel;
  if (with_jacobian) dmodel = base.jacobian();
  for (int order = 2; order <= p - 1; ++order) {
    std::vector<Vector> dirs(static_cast<std::size_t>(order), h);
    model += field.derivative(z, dirs) / factorial(order);
    if (with_jacobian) {
      // d/dw of (1/k!) d^kF[h]^k is (1/(k-1)!) d^kF[h]^{k-1}[.]
      const double scale = 1.0 / factorial(order - 1);
      for (int j = 0; j < n; ++j) {
        dirs.back() = Vector::Unit(n, j);
        dmodel.col(j) += scale * field.derivative(z, dirs);
      }
    }
  }
  ModelEval out;
  out.residual = h + gamma * model;
  if (with_jacobian) out.jacobian = Matrix::Identity(n, n) + gamma * dmodel;
  return out;
}

}  // namespace

ResolventStep::ResolventStep(const VectorField& field, const Vector& z)
    : ResolventStep(z, field.eval(z), field.jacobian(z)) {}

// stableNorm: the squares of a field near the bottom of the double range underflow.
ResolventStep::ResolventStep(Vector z, Vector field_value, Matrix jacobian)
    : z_(std::move(z)), f_(std::move(field_value)), jac_(std::move(jacobian)), fnorm_(f_.stableNorm()) {
  if (f_.size() != z_.size() || jac_.rows() != z_.size() || jac_.cols() != z_.size()) {
    throw ConfigurationError("ResolventStep: dimension mismatch");
  }
  if (!f_.allFinite() || !jac_.allFinite()) throw DomainError("ResolventStep: non-finite field data");
}

Vector ResolventStep::zhat(double gamma) const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw UsageError(fmt::format("implicit step: gamma must be finite and >= 0, got {}", gamma));
  }
  if (gamma == 0.0) return z_;
  const int n = static_cast<int>(z_.size());
  const Matrix system = Matrix::Identity(n, n) + gamma * jac_;
  const Vector w = z_ + linalg::solve(system, -gamma * f_);
  const double res = residual(w, gamma);
  if (!(res <= 1e-10 * (1.0 + gamma * fnorm_))) {
    throw LinearSolveError(fmt::format("implicit step: residual {:.3e} above tolerance at gamma={:.6g}", res, gamma),
                           1.0 / linalg::reciprocal_condition(system));
  }
  return w;
}

double ResolventStep::residual(const Vector& w, double gamma) const {
  const Vector h = w - z_;
  return (gamma * (f_ + jac_ * h) + h).norm();
}

Vector implicit_step_p2(const VectorField& field, const Vector& z, double gamma) {
  if (gamma == 0.0) return z;
  return ResolventStep(field, z).zhat(gamma);
}

ImplicitStep implicit_step_general(const VectorField& field, int p, const Vector& z, double gamma, double tol,
                                   int max_iter) {
  return implicit_step_general(field, p, ResolventStep(field, z), gamma, tol, max_iter);
}

ImplicitStep implicit_step_general(const VectorField& field, int p, const ResolventStep& base, double gamma,
                                   double tol, int max_iter) {
  if (p < 2) throw ConfigurationError(fmt::format("implicit_step_general: p must be >= 2, got {}", p));
  if (p > field.max_order() + 1) {
    throw UnsupportedOrderError(fmt::format("implicit_step_general: p={} needs derivatives up to order {}, field has {}",
                                            p, p - 1, field.max_order()));
  }
  if (!(tol > 0.0)) throw ConfigurationError("implicit_step_general: tol must be > 0");
  if (gamma == 0.0) return {base.base(), 0.0, 0};

  const double target = tol * (1.0 + gamma * base.fnorm());
  Vector w = base.zhat(gamma);
  ModelEval current = evaluate_model(field, p, base, gamma, w, false);
  double rnorm = current.residual.norm();
  int iters = 0;
  while (!(rnorm <= target)) {
    if (iters >= max_iter) {
      throw OracleFailure(fmt::format("implicit_step_general: no convergence after {} Newton steps (|r|={:.3e}, "
                                      "target {:.3e}, gamma={:.6g})",
                                      iters, rnorm, target, gamma));
    }
    const ModelEval full = evaluate_model(field, p, base, gamma, w, true);
    Vector delta;
    try {
      delta = linalg::solve(full.jacobian, -full.residual);
    } catch (const LinearSolveError& e) {
      throw OracleFailure(fmt::format("implicit_step_general: singular Newton system ({})", e.what()));
    }
    double alpha = 1.0;
    Vector trial = w + delta;
    ModelEval next = evaluate_model(field, p, base, gamma, trial, false);
    double next_norm = next.residual.norm();
    while (!(next_norm < (1.0 - 1e-4 * alpha) * rnorm) && alpha > 1e-10) {
      alpha *= 0.5;
      trial = w + alpha * delta;
      next = evaluate_model(field, p, base, gamma, trial, false);
      next_norm = next.residual.norm();
    }
    ++iters;
    if (!(next_norm < rnorm)) {
      throw OracleFailure(fmt::format("implicit_step_general: line search stalled at |r|={:.3e}", rnorm));
    }
    w = std::move(trial);
    rnorm = next_norm;
  }
  return {std::move(w), rnorm, iters};
}

}  // namespace homp
