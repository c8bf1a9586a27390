#pragma once

#include "homp/vectorfield.hpp"

namespace homp {

/// F and its Jacobian frozen at a base point z, giving the linearized
/// extrapolation zhat(gamma) = z - gamma (I + gamma dF(z))^{-1} F(z).
class ResolventStep {
 public:
  ResolventStep(const VectorField& field, const Vector& z);
  ResolventStep(Vector z, Vector field_value, Matrix jacobian);

  const Vector& base() const { return z_; }
  const Vector& field_value() const { return f_; }
  const Matrix& jacobian() const { return jac_; }
  double fnorm() const { return fnorm_; }

  /// One dense solve; gamma = 0 returns the base point.
  Vector zhat(double gamma) const;

  /// |gamma (F(z) + dF(z)(w - z)) + w - z|.
  double residual(const Vector& w, double gamma) const;

 private:
  Vector z_;
  Vector f_;
  Matrix jac_;
  double fnorm_;
};

/// Unconstrained second-order extrapolation: solves
/// gamma (F(z) + dF(z)(zhat - z)) + zhat - z = 0. Throws LinearSolveError when
/// I + gamma dF(z) is singular or the residual exceeds 1e-10 (1 + gamma |F(z)|).
Vector implicit_step_p2(const VectorField& field, const Vector& z, double gamma);

struct ImplicitStep {
  Vector zhat;
  /// Absolute residual |r(zhat)|.
  double residual = 0.0;
  int iterations = 0;
};

/// Solves r(w) = w - z + gamma T_{p-1}(w; z) = 0 by damped Newton started from
/// the p = 2 solution, to |r| <= tol (1 + gamma |F(z)|). Throws OracleFailure
/// when max_iter Newton steps do not suffice.
ImplicitStep implicit_step_general(const VectorField& field, int p, const Vector& z, double gamma, double tol,
                                   int max_iter);
ImplicitStep implicit_step_general(const VectorField& field, int p, const ResolventStep& base, double gamma,
                                   double tol, int max_iter);

}  // namespace homp
