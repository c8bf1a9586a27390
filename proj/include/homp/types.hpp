#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace homp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid problem, solver or experiment setup.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Misuse of an API (empty inputs and the like).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOrderError : public Error {
 public:
  using Error::Error;
};

class LinearSolveError : public Error {
 public:
  LinearSolveError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// A solver hit a non-finite value or violated an internal invariant.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// The implicit-step Newton solve did not converge within its budget.
class OracleFailure : public Error {
 public:
  using Error::Error;
};

/// Step-size search received an invalid bracket or failed to bracket.
class BracketError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Seeded generator with a platform-independent uniform draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) built from the top 53 bits of the engine output.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; keeps the sequence identical across standard libraries.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  Vector uniform_vector(int n, double lo, double hi) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Matrix uniform_matrix(int rows, int cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

  /// Uniform point in the Euclidean ball of the given radius.
  Vector in_ball(const Vector& center, double radius) {
    const int n = static_cast<int>(center.size());
    Vector dir(n);
    for (int i = 0; i < n; ++i) dir[i] = normal();
    const double norm = dir.norm();
    if (norm == 0.0) return center;
    const double r = radius * std::pow(uniform(), 1.0 / n);
    return center + (r / norm) * dir;
  }

  Vector on_sphere(int n) {
    Vector dir(n);
    double norm = 0.0;
    while (norm == 0.0) {
      for (int i = 0; i < n; ++i) dir[i] = normal();
      norm = dir.norm();
    }
    return dir / norm;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace homp
