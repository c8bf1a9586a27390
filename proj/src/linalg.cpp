#include "homp/linalg.hpp"

#include <fmt/format.h>

namespace homp::linalg {
namespace {

void check_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw ConfigurationError(fmt::format("{}: matrix must be square, got {}x{}", what, m.rows(), m.cols()));
  }
}

void check_dense_size(const Matrix& m, const char* what) {
  if (m.rows() > kMaxDenseDim || m.cols() > kMaxDenseDim) {
    throw ConfigurationError(fmt::format("{}: dimension {}x{} exceeds the dense limit {}", what, m.rows(),
                                         m.cols(), kMaxDenseDim));
  }
}

}  // namespace

double reciprocal_condition(const Matrix& m) {
  check_square(m, "reciprocal_condition");
  if (m.size() == 0) return 1.0;
  if (!m.allFinite()) return 0.0;
  Eigen::PartialPivLU<Matrix> lu(m);
  const double rcond = lu.rcond();
  return std::isfinite(rcond) ? rcond : 0.0;
}

Vector solve(const Matrix& m, const Vector& rhs) {
  check_square(m, "solve");
  if (m.rows() != rhs.size()) {
    throw ConfigurationError(fmt::format("solve: rhs has size {}, expected {}", rhs.size(), m.rows()));
  }
  if (!m.allFinite() || !rhs.allFinite()) {
    throw LinearSolveError("solve: non-finite input", std::numeric_limits<double>::infinity());
  }
  Eigen::PartialPivLU<Matrix> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxCondition >= 1.0)) {
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    throw LinearSolveError(fmt::format("solve: matrix is singular or ill-conditioned (condition estimate {:.3e})", cond),
                           cond);
  }
  Vector x = lu.solve(rhs);
  const Vector r = rhs - m * x;
  x += lu.solve(r);
  if (!x.allFinite()) {
    throw LinearSolveError("solve: non-finite solution", 1.0 / rcond);
  }
  return x;
}

Vector singular_values(const Matrix& m) {
  check_dense_size(m, "singular_values");
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

double operator_norm(const Matrix& m) {
  const Vector s = singular_values(m);
  return s.size() == 0 ? 0.0 : s[0];
}

double sigma_min(const Matrix& m) {
  const Vector s = singular_values(m);
  return s.size() == 0 ? 0.0 : s[s.size() - 1];
}

Eigen::VectorXcd eigenvalues(const Matrix& m) {
  check_square(m, "eigenvalues");
  check_dense_size(m, "eigenvalues");
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("eigenvalues: QR iteration did not converge", 0);
  }
  return solver.eigenvalues();
}

double min_symmetric_eigenvalue(const Matrix& s) {
  check_square(s, "min_symmetric_eigenvalue");
  check_dense_size(s, "min_symmetric_eigenvalue");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace homp::linalg
