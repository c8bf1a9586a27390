#pragma once

#include <Eigen/Dense>

#include "homp/types.hpp"

namespace homp::linalg {

/// Largest dimension accepted by the dense decompositions below.
inline constexpr int kMaxDenseDim = 200;

/// Solves are refused above this condition estimate.
inline constexpr double kMaxCondition = 1e14;

/// Solves M x = rhs by LU with partial pivoting plus one step of iterative
/// refinement. Throws LinearSolveError when M is singular or its 1-norm
/// condition estimate exceeds kMaxCondition.
Vector solve(const Matrix& m, const Vector& rhs);

/// Reciprocal of the LU-based 1-norm condition estimate (0 for singular M).
double reciprocal_condition(const Matrix& m);

/// Largest singular value.
double operator_norm(const Matrix& m);

/// Smallest singular value (square or rectangular, min dimension).
double sigma_min(const Matrix& m);

/// Full singular spectrum in decreasing order.
Vector singular_values(const Matrix& m);

/// Eigenvalues of a general real square matrix (Hessenberg reduction + QR).
Eigen::VectorXcd eigenvalues(const Matrix& m);

/// Smallest eigenvalue of the symmetric matrix s.
double min_symmetric_eigenvalue(const Matrix& s);

}  // namespace homp::linalg
