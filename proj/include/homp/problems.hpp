#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "homp/geometry.hpp"
#include "homp/vectorfield.hpp"

namespace homp {

enum class ProblemKind { kBilinear, kCubicReg, kQuarticReg, kMatrixGame, kMonotoneQuadratic };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);

enum class SetKind { kWholeSpace, kBall, kSimplex };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kBilinear;
  /// Block dimension: x and y both live in R^n unless n_x / n_y are set.
  /// For monotone_quadratic, the dimension of z.
  int n = 1;
  std::optional<int> n_x;
  std::optional<int> n_y;
  /// Explicit coupling matrix (n_x by n_y, or n by n for monotone_quadratic).
  /// Random uniform[-1, 1] / sqrt(n) when absent.
  std::optional<Matrix> A;
  /// Linear terms of the bilinear objective; q for monotone_quadratic.
  std::optional<Vector> b;
  std::optional<Vector> c;
  double rho = 1.0;
  std::uint64_t seed = 0;
  /// Ball sets are centred at the origin. Matrix games are always on simplices.
  SetKind sets = SetKind::kWholeSpace;
  double set_radius = 1.0;
  /// Radius around z* on which local Lipschitz constants are declared.
  double domain_radius = 3.0;

  int dim_x() const { return n_x.value_or(n); }
  int dim_y() const { return n_y.value_or(n); }
  void validate() const;
};

/// min_x max_y g(x, y), with F = (grad_x g, -grad_y g).
struct MinMaxProblem {
  std::string name;
  int n_x = 0;
  int n_y = 0;
  std::function<double(const Vector&, const Vector&)> objective;
  BlockGradient grad_x;
  BlockGradient grad_y;
  /// argmin_x g(x, y) and argmax_y g(x, y) over the feasible blocks; empty
  /// when not available in closed form.
  std::function<Vector(const Vector&)> best_response_x;
  std::function<Vector(const Vector&)> best_response_y;

  Vector stack(const Vector& x, const Vector& y) const;
  Vector x_part(const Vector& z) const { return z.head(n_x); }
  Vector y_part(const Vector& z) const { return z.tail(n_y); }
};

/// Everything a solver run needs: the operator, its declared constants, the
/// feasible set with its geometry, and the known solution if there is one.
struct TestProblem {
  ProblemSpec spec;
  std::string name;
  VectorField field;
  SmoothnessSpec smoothness;
  ConstraintSet set;
  BregmanGeometry geometry;
  std::optional<Vector> solution;
  /// Absent for monotone_quadratic, which is not a saddle problem.
  std::optional<MinMaxProblem> minmax;

  int dim() const { return field.dim(); }
};

TestProblem make_problem(const ProblemSpec& spec);

/// Starting point e_1 for unconstrained problems, the centre of the simplex
/// blocks otherwise (clipped into balls).
Vector default_start(const TestProblem& problem);

}  // namespace homp
