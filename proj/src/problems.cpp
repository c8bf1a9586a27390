#include "homp/problems.hpp"

#include <cmath>

#include <fmt/format.h>

#include "homp/linalg.hpp"

namespace homp {
namespace {

Matrix random_coupling(Rng& rng, int rows, int cols) {
  return rng.uniform_matrix(rows, cols, -1.0, 1.0) / std::sqrt(static_cast<double>(std::max(rows, cols)));
}

void check_shape(const Matrix& a, int rows, int cols, const char* what) {
  if (a.rows() != rows || a.cols() != cols) {
    throw ConfigurationError(
        fmt::format("problem: {} has shape {}x{}, expected {}x{}", what, a.rows(), a.cols(), rows, cols));
  }
  if (!a.allFinite()) throw ConfigurationError(fmt::format("problem: {} has non-finite entries", what));
}

void check_length(const Vector& v, int n, const char* what) {
  if (v.size() != n) throw ConfigurationError(fmt::format("problem: {} has length {}, expected {}", what, v.size(), n));
  if (!v.allFinite()) throw ConfigurationError(fmt::format("problem: {} has non-finite entries", what));
}

/// Point of the centred ball maximizing <v, .>.
Vector ball_argmax(const Vector& v, double radius) {
  const double norm = v.norm();
  if (norm == 0.0) return Vector::Zero(v.size());
  return (radius / norm) * v;
}

Vector vertex(int n, int i) {
  Vector e = Vector::Zero(n);
  e[i] = 1.0;
  return e;
}

ConstraintSet block_set(SetKind kind, int n, double radius) {
  switch (kind) {
    case SetKind::kWholeSpace:
      return ConstraintSet::whole_space(n);
    case SetKind::kBall:
      return ConstraintSet::ball(Vector::Zero(n), radius);
    case SetKind::kSimplex:
      return ConstraintSet::simplex(n);
  }
  throw ConfigurationError("problem: unknown set kind");
}

TestProblem bilinear(const ProblemSpec& spec, Rng& rng) {
  const int nx = spec.dim_x();
  const int ny = spec.dim_y();
  const Matrix a = spec.A ? *spec.A : random_coupling(rng, nx, ny);
  check_shape(a, nx, ny, "A");
  const Vector b = spec.b.value_or(Vector::Zero(nx));
  const Vector c = spec.c.value_or(Vector::Zero(ny));
  check_length(b, nx, "b");
  check_length(c, ny, "c");
  if (spec.sets == SetKind::kSimplex) throw ConfigurationError("problem: bilinear supports whole_space or ball sets");

  Matrix m = Matrix::Zero(nx + ny, nx + ny);
  m.topRightCorner(nx, ny) = a;
  m.bottomLeftCorner(ny, nx) = -a.transpose();
  Vector offset(nx + ny);
  offset << b, -c;

  SmoothnessSpec smooth;
  smooth.lipschitz[1] = linalg::operator_norm(a);
  smooth.lipschitz[2] = 0.0;

  std::optional<Vector> solution;
  if (nx == ny && linalg::sigma_min(a) > 1e-10 * std::max(1.0, smooth.lipschitz[1])) {
    // A y* = -b and A^T x* = -c.
    Vector z(nx + ny);
    z << linalg::solve(a.transpose(), -c), linalg::solve(a, -b);
    const bool interior = spec.sets == SetKind::kWholeSpace ||
                          (z.head(nx).norm() < spec.set_radius && z.tail(ny).norm() < spec.set_radius);
    if (interior) solution = z;
    smooth.mu = linalg::sigma_min(a);
  }

  MinMaxProblem mm;
  mm.name = "bilinear";
  mm.n_x = nx;
  mm.n_y = ny;
  mm.objective = [a, b, c](const Vector& x, const Vector& y) { return x.dot(a * y) + b.dot(x) + c.dot(y); };
  mm.grad_x = [a, b](const Vector&, const Vector& y) -> Vector { return a * y + b; };
  mm.grad_y = [a, c](const Vector& x, const Vector&) -> Vector { return a.transpose() * x + c; };
  if (spec.sets == SetKind::kBall) {
    const double r = spec.set_radius;
    mm.best_response_x = [a, b, r](const Vector& y) { return ball_argmax(-(a * y + b), r); };
    mm.best_response_y = [a, c, r](const Vector& x) { return ball_argmax(a.transpose() * x + c, r); };
  }

  const ConstraintSet set = ConstraintSet::product(
      {block_set(spec.sets, nx, spec.set_radius), block_set(spec.sets, ny, spec.set_radius)});
  return TestProblem{spec,           "bilinear", VectorField::linear(m, offset), smooth, set,
                     BregmanGeometry::squared_euclidean(), solution, mm};
}

/// Shared shape of the separable regularized problems:
/// g = sum r(x_i) + x^T A y - sum r(y_j).
TestProblem regularized(const ProblemSpec& spec, Rng& rng, bool quartic) {
  if (!(spec.rho > 0.0) || !std::isfinite(spec.rho)) throw ConfigurationError("problem: rho must be > 0");
  if (spec.sets != SetKind::kWholeSpace) throw ConfigurationError("problem: regularized problems are unconstrained");
  if (spec.b || spec.c) throw ConfigurationError("problem: regularized problems take no linear terms");
  const int nx = spec.dim_x();
  const int ny = spec.dim_y();
  const int n = nx + ny;
  const Matrix a = spec.A ? *spec.A : random_coupling(rng, nx, ny);
  check_shape(a, nx, ny, "A");
  const double rho = spec.rho;

  Matrix coupling = Matrix::Zero(n, n);
  coupling.topRightCorner(nx, ny) = a;
  coupling.bottomLeftCorner(ny, nx) = -a.transpose();

  VectorField::EvalFn eval;
  VectorField::JacobianFn jac;
  VectorField::DerivativeFn higher;
  SmoothnessSpec smooth;
  const double sa = linalg::operator_norm(a);
  const double radius = spec.domain_radius;
  smooth.domain_radius = radius;

  if (!quartic) {
    // r(s) = (rho/3)|s|^3: F_i = rho s|s| in both blocks.
    eval = [coupling, rho](const Vector& z) -> Vector {
      return coupling * z + rho * z.cwiseProduct(z.cwiseAbs());
    };
    jac = [coupling, rho](const Vector& z) -> Matrix {
      Matrix j = coupling;
      j.diagonal() += 2.0 * rho * z.cwiseAbs();
      return j;
    };
    higher = [rho](const Vector& u, std::span<const Vector> dirs) -> Vector {
      if (dirs.size() > 2) throw UnsupportedOrderError("cubic_reg: derivatives above order 2 do not exist");
      Vector sign = u.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
      return 2.0 * rho * sign.cwiseProduct(dirs[0]).cwiseProduct(dirs[1]);
    };
    smooth.lipschitz[1] = sa + 2.0 * rho * radius;
    smooth.lipschitz[2] = 2.0 * rho;
  } else {
    // r(s) = (rho/12) s^4: F_i = (rho/3) s^3.
    eval = [coupling, rho](const Vector& z) -> Vector {
      return coupling * z + (rho / 3.0) * z.array().cube().matrix();
    };
    jac = [coupling, rho](const Vector& z) -> Matrix {
      Matrix j = coupling;
      j.diagonal() += rho * z.cwiseAbs2();
      return j;
    };
    higher = [rho](const Vector& u, std::span<const Vector> dirs) -> Vector {
      Vector out = 2.0 * rho * dirs[0].cwiseProduct(dirs[1]);
      if (dirs.size() == 2) return out.cwiseProduct(u);
      if (dirs.size() == 3) return out.cwiseProduct(dirs[2]);
      return Vector::Zero(u.size());
    };
    smooth.lipschitz[1] = sa + rho * radius * radius;
    smooth.lipschitz[2] = 2.0 * rho * radius;
    smooth.lipschitz[3] = 2.0 * rho;
  }

  const int max_order = quartic ? VectorField::kUnboundedOrder : 2;
  VectorField field(n, std::move(eval), std::move(jac), std::move(higher), max_order);

  MinMaxProblem mm;
  mm.name = quartic ? "quartic_reg" : "cubic_reg";
  mm.n_x = nx;
  mm.n_y = ny;
  if (quartic) {
    mm.objective = [a, rho](const Vector& x, const Vector& y) {
      return (rho / 12.0) * x.array().pow(4).sum() + x.dot(a * y) - (rho / 12.0) * y.array().pow(4).sum();
    };
    mm.grad_x = [a, rho](const Vector& x, const Vector& y) -> Vector {
      return (rho / 3.0) * x.array().cube().matrix() + a * y;
    };
    mm.grad_y = [a, rho](const Vector& x, const Vector& y) -> Vector {
      return a.transpose() * x - (rho / 3.0) * y.array().cube().matrix();
    };
  } else {
    mm.objective = [a, rho](const Vector& x, const Vector& y) {
      return (rho / 3.0) * x.array().abs().cube().sum() + x.dot(a * y) - (rho / 3.0) * y.array().abs().cube().sum();
    };
    mm.grad_x = [a, rho](const Vector& x, const Vector& y) -> Vector {
      return rho * x.cwiseProduct(x.cwiseAbs()) + a * y;
    };
    mm.grad_y = [a, rho](const Vector& x, const Vector& y) -> Vector {
      return a.transpose() * x - rho * y.cwiseProduct(y.cwiseAbs());
    };
  }

  return TestProblem{spec,   mm.name, std::move(field), smooth, ConstraintSet::whole_space(n),
                     BregmanGeometry::squared_euclidean(), Vector::Zero(n), mm};
}

TestProblem matrix_game(const ProblemSpec& spec, Rng& rng) {
  const int nx = spec.dim_x();
  const int ny = spec.dim_y();
  if (spec.sets != SetKind::kSimplex && spec.sets != SetKind::kWholeSpace) {
    throw ConfigurationError("problem: matrix_game is played on simplices");
  }
  if (spec.b || spec.c) throw ConfigurationError("problem: matrix_game takes no linear terms");
  const Matrix a = spec.A ? *spec.A : rng.uniform_matrix(nx, ny, -1.0, 1.0);
  check_shape(a, nx, ny, "A");

  Matrix m = Matrix::Zero(nx + ny, nx + ny);
  m.topRightCorner(nx, ny) = a;
  m.bottomLeftCorner(ny, nx) = -a.transpose();

  SmoothnessSpec smooth;
  // Lipschitz constant of F from the l1 norm to the l-infinity norm.
  smooth.lipschitz[1] = a.cwiseAbs().maxCoeff();
  smooth.lipschitz[2] = 0.0;

  MinMaxProblem mm;
  mm.name = "matrix_game";
  mm.n_x = nx;
  mm.n_y = ny;
  mm.objective = [a](const Vector& x, const Vector& y) { return x.dot(a * y); };
  mm.grad_x = [a](const Vector&, const Vector& y) -> Vector { return a * y; };
  mm.grad_y = [a](const Vector& x, const Vector&) -> Vector { return a.transpose() * x; };
  mm.best_response_x = [a, nx](const Vector& y) {
    Eigen::Index i = 0;
    (a * y).minCoeff(&i);
    return vertex(nx, static_cast<int>(i));
  };
  mm.best_response_y = [a, ny](const Vector& x) {
    Eigen::Index j = 0;
    (a.transpose() * x).maxCoeff(&j);
    return vertex(ny, static_cast<int>(j));
  };

  const ConstraintSet set = ConstraintSet::product({ConstraintSet::simplex(nx), ConstraintSet::simplex(ny)});
  return TestProblem{spec, "matrix_game", VectorField::linear(m), smooth, set, BregmanGeometry::negative_entropy(),
                     std::nullopt, mm};
}

TestProblem monotone_quadratic(const ProblemSpec& spec, Rng& rng) {
  const int n = spec.n;
  if (spec.n_x || spec.n_y) throw ConfigurationError("problem: monotone_quadratic takes a single dimension n");
  if (spec.sets != SetKind::kWholeSpace) throw ConfigurationError("problem: monotone_quadratic is unconstrained");
  if (spec.c) throw ConfigurationError("problem: monotone_quadratic takes q through b only");
  Matrix m;
  if (spec.A) {
    m = *spec.A;
    check_shape(m, n, n, "A");
  } else {
    const Matrix g = rng.uniform_matrix(n, n, -1.0, 1.0);
    const Matrix s = g.transpose() * g / static_cast<double>(n);
    const Matrix bmat = random_coupling(rng, n, n);
    m = s + 0.5 * (bmat - bmat.transpose());
  }
  const Vector q = spec.b ? *spec.b : rng.uniform_vector(n, -1.0, 1.0) / std::sqrt(static_cast<double>(n));
  check_length(q, n, "b");
  if (linalg::min_symmetric_eigenvalue(0.5 * (m + m.transpose())) < -1e-10) {
    throw ConfigurationError("problem: monotone_quadratic needs a positive semidefinite symmetric part");
  }

  SmoothnessSpec smooth;
  smooth.lipschitz[1] = linalg::operator_norm(m);
  smooth.lipschitz[2] = 0.0;
  std::optional<Vector> solution;
  const double smin = linalg::sigma_min(m);
  if (smin > 1e-10 * std::max(1.0, smooth.lipschitz[1])) {
    solution = linalg::solve(m, -q);
    smooth.mu = smin;
  }
  return TestProblem{spec,          "monotone_quadratic", VectorField::linear(m, q), smooth,
                     ConstraintSet::whole_space(n), BregmanGeometry::squared_euclidean(), solution, std::nullopt};
}

}  // namespace

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::kBilinear:
      return "bilinear";
    case ProblemKind::kCubicReg:
      return "cubic_reg";
    case ProblemKind::kQuarticReg:
      return "quartic_reg";
    case ProblemKind::kMatrixGame:
      return "matrix_game";
    case ProblemKind::kMonotoneQuadratic:
      return "monotone_quadratic";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& name) {
  for (ProblemKind k : {ProblemKind::kBilinear, ProblemKind::kCubicReg, ProblemKind::kQuarticReg,
                        ProblemKind::kMatrixGame, ProblemKind::kMonotoneQuadratic}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigurationError(fmt::format("unknown problem kind '{}'", name));
}

void ProblemSpec::validate() const {
  if (n < 1 || dim_x() < 1 || dim_y() < 1) throw ConfigurationError("problem: dimensions must be >= 1");
  const int total = kind == ProblemKind::kMonotoneQuadratic ? n : dim_x() + dim_y();
  if (total > linalg::kMaxDenseDim) {
    throw ConfigurationError(fmt::format("problem: dimension {} exceeds the dense limit {}", total, linalg::kMaxDenseDim));
  }
  if (!(set_radius > 0.0)) throw ConfigurationError("problem: set_radius must be > 0");
  if (!(domain_radius > 0.0)) throw ConfigurationError("problem: domain_radius must be > 0");
}

Vector MinMaxProblem::stack(const Vector& x, const Vector& y) const {
  Vector z(x.size() + y.size());
  z << x, y;
  return z;
}

TestProblem make_problem(const ProblemSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  switch (spec.kind) {
    case ProblemKind::kBilinear:
      return bilinear(spec, rng);
    case ProblemKind::kCubicReg:
      return regularized(spec, rng, false);
    case ProblemKind::kQuarticReg:
      return regularized(spec, rng, true);
    case ProblemKind::kMatrixGame:
      return matrix_game(spec, rng);
    case ProblemKind::kMonotoneQuadratic:
      return monotone_quadratic(spec, rng);
  }
  throw ConfigurationError("problem: unknown kind");
}

Vector default_start(const TestProblem& problem) {
  const int n = problem.dim();
  Vector z = Vector::Zero(n);
  if (problem.set.is_whole_space()) {
    z[0] = 1.0;
    return z;
  }
  int offset = 0;
  for (const SetBlock& block : problem.set.blocks()) {
    const int k = block_dim(block);
    if (std::holds_alternative<Simplex>(block)) {
      z.segment(offset, k).setConstant(1.0 / k);
    } else if (const auto* ball = std::get_if<Ball>(&block)) {
      z.segment(offset, k) = ball->center;
      if (offset == 0) z[0] += 0.5 * ball->radius;
    } else if (const auto* box = std::get_if<Box>(&block)) {
      z.segment(offset, k) = 0.5 * (box->lower + box->upper);
    } else if (offset == 0) {
      z[0] = 1.0;
    }
    offset += k;
  }
  return z;
}

}  // namespace homp
