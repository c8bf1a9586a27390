#include <gtest/gtest.h>

#include <cmath>

#include "homp/diagnostics.hpp"
#include "homp/linalg.hpp"
#include "homp/problems.hpp"

using namespace homp;

namespace {

ProblemSpec make_spec(ProblemKind kind, int n, std::uint64_t seed) {
  ProblemSpec spec;
  spec.kind = kind;
  spec.n = n;
  spec.seed = seed;
  return spec;
}

std::vector<TestProblem> shipped() {
  std::vector<TestProblem> out;
  for (ProblemKind kind : {ProblemKind::kBilinear, ProblemKind::kCubicReg, ProblemKind::kQuarticReg,
                           ProblemKind::kMatrixGame, ProblemKind::kMonotoneQuadratic}) {
    for (std::uint64_t seed : {1u, 2u}) out.push_back(make_problem(make_spec(kind, 3, seed)));
  }
  return out;
}

Vector center_of(const TestProblem& p) { return p.solution ? *p.solution : default_start(p); }

}  // namespace

TEST(Problems, CubicJacobianLipschitzEstimate) {
  ProblemSpec spec = make_spec(ProblemKind::kCubicReg, 1, 0);
  spec.A = Matrix::Zero(1, 1);
  const TestProblem p = make_problem(spec);
  EXPECT_DOUBLE_EQ(*p.smoothness.constant(2), 2.0);
  Rng rng(5);
  double est = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const Vector u = rng.in_ball(Vector::Zero(2), 2.0);
    const Vector v = rng.in_ball(Vector::Zero(2), 2.0);
    const double du = (u - v).norm();
    if (du < 1e-8) continue;
    est = std::max(est, linalg::operator_norm(p.field.jacobian(u) - p.field.jacobian(v)) / du);
  }
  EXPECT_GE(est, 1.9);
  EXPECT_LE(est, 2.0 + 1e-12);
}

TEST(Problems, QuarticSecondDerivativeLipschitzEstimate) {
  ProblemSpec spec = make_spec(ProblemKind::kQuarticReg, 1, 0);
  spec.A = Matrix::Zero(1, 1);
  const TestProblem p = make_problem(spec);
  Rng rng(6);
  double est = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const Vector u = rng.in_ball(Vector::Zero(2), 2.0);
    const Vector v = rng.in_ball(Vector::Zero(2), 2.0);
    const double du = (u - v).norm();
    if (du < 1e-8) continue;
    // Bilinear form is diagonal, so its norm is attained on coordinate pairs.
    for (int i = 0; i < 2; ++i) {
      const Vector e = Vector::Unit(2, i);
      est = std::max(est, (p.field.dir_derivative(2, u, e) - p.field.dir_derivative(2, v, e)).norm() / du);
    }
  }
  EXPECT_NEAR(est, *p.smoothness.constant(3), 0.05 * 2.0);
  EXPECT_DOUBLE_EQ(*p.smoothness.constant(3), 2.0);
}

TEST(Problems, AllMonotone) {
  for (const TestProblem& p : shipped()) {
    const MonotonicityReport r =
        check_monotone(p.field, ball_pair_sampler(center_of(p), 3.0, 17), 1000, 1e-10);
    EXPECT_TRUE(r.monotone) << p.name << " " << r.min_inner;
  }
}

TEST(Problems, DeclaredL1BoundsSampledConstant) {
  for (const TestProblem& p : shipped()) {
    const double L1 = *p.smoothness.constant(1);
    const bool game = p.spec.kind == ProblemKind::kMatrixGame;
    const double radius = std::isfinite(p.smoothness.domain_radius) ? p.smoothness.domain_radius : 3.0;
    Rng rng(23);
    double est = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Vector u = rng.in_ball(center_of(p), radius);
      const Vector v = rng.in_ball(center_of(p), radius);
      const Vector df = p.field.eval(u) - p.field.eval(v);
      // Matrix games measure F in the l1 / l-infinity pair.
      const double ratio = game ? df.lpNorm<Eigen::Infinity>() / (u - v).lpNorm<1>() : df.norm() / (u - v).norm();
      est = std::max(est, ratio);
    }
    if (!game) {
      // Near-extremal pairs: jacobian norm at sampled points.
      for (int k = 0; k < 200; ++k) {
        const Vector z = center_of(p) + radius * rng.on_sphere(p.dim());
        est = std::max(est, linalg::operator_norm(p.field.jacobian(z)));
      }
    }
    EXPECT_LE(est, L1 * (1 + 1e-12)) << p.name;
    EXPECT_GE(est, 0.5 * L1) << p.name;
  }
}

TEST(Problems, SolutionsAreZeros) {
  for (const TestProblem& p : shipped()) {
    if (!p.solution) continue;
    EXPECT_LE(p.field.eval(*p.solution).norm(), 1e-10) << p.name;
  }
}

TEST(Problems, JacobianSpectrumConsistent) {
  for (const TestProblem& p : shipped()) {
    Rng rng(31);
    for (int k = 0; k < 20; ++k) {
      const SpectrumReport r = jacobian_spectrum_check(p.field.jacobian(rng.in_ball(center_of(p), 3.0)));
      EXPECT_TRUE(r.psd_checked) << p.name;
      EXPECT_TRUE(r.ok()) << p.name;
    }
  }
}

TEST(Problems, SeededReproducibility) {
  for (ProblemKind kind : {ProblemKind::kBilinear, ProblemKind::kMatrixGame, ProblemKind::kMonotoneQuadratic}) {
    const TestProblem a = make_problem(make_spec(kind, 4, 99));
    const TestProblem b = make_problem(make_spec(kind, 4, 99));
    const TestProblem c = make_problem(make_spec(kind, 4, 100));
    const Vector z = Vector::LinSpaced(a.dim(), 0.1, 0.9);
    EXPECT_EQ(a.field.eval(z), b.field.eval(z));
    EXPECT_NE(a.field.eval(z), c.field.eval(z));
  }
}

TEST(Problems, InvalidSpecs) {
  EXPECT_THROW(make_problem(make_spec(ProblemKind::kBilinear, 0, 0)), ConfigurationError);
  ProblemSpec rho = make_spec(ProblemKind::kCubicReg, 2, 0);
  rho.rho = 0.0;
  EXPECT_THROW(make_problem(rho), ConfigurationError);
  ProblemSpec shape = make_spec(ProblemKind::kBilinear, 2, 0);
  shape.A = Matrix::Identity(3, 3);
  EXPECT_THROW(make_problem(shape), ConfigurationError);
  ProblemSpec indefinite = make_spec(ProblemKind::kMonotoneQuadratic, 2, 0);
  indefinite.A = Matrix::Identity(2, 2);
  (*indefinite.A)(0, 0) = -1.0;
  EXPECT_THROW(make_problem(indefinite), ConfigurationError);
  EXPECT_THROW(problem_kind_from_string("saddle"), ConfigurationError);
}

TEST(Problems, RotationExample) {
  ProblemSpec spec = make_spec(ProblemKind::kBilinear, 1, 0);
  spec.A = Matrix::Ones(1, 1);
  const TestProblem p = make_problem(spec);
  ASSERT_TRUE(p.solution);
  EXPECT_TRUE(p.solution->isZero());
  Vector z(2);
  z << 1, 0;
  Vector expected(2);
  expected << 0, -1;
  EXPECT_EQ(p.field.eval(z), expected);
  EXPECT_DOUBLE_EQ(*p.smoothness.constant(1), 1.0);
}

TEST(Problems, ConvexConcaveAlongSegments) {
  for (const TestProblem& p : shipped()) {
    if (!p.minmax) continue;
    const MinMaxProblem& mm = *p.minmax;
    Rng rng(41);
    for (int k = 0; k < 200; ++k) {
      const Vector a = rng.in_ball(center_of(p), 2.0);
      const Vector b = rng.in_ball(center_of(p), 2.0);
      const Vector y = mm.y_part(a);
      const Vector x = mm.x_part(a);
      const Vector x0 = mm.x_part(a), x1 = mm.x_part(b);
      const Vector y0 = mm.y_part(a), y1 = mm.y_part(b);
      const double tol = 1e-10 * (1 + std::abs(mm.objective(x0, y)) + std::abs(mm.objective(x1, y)));
      EXPECT_LE(mm.objective(0.5 * (x0 + x1), y), 0.5 * (mm.objective(x0, y) + mm.objective(x1, y)) + tol);
      EXPECT_GE(mm.objective(x, 0.5 * (y0 + y1)), 0.5 * (mm.objective(x, y0) + mm.objective(x, y1)) - tol);
    }
    // The field is the gradient field of the objective.
    const Vector z = rng.in_ball(center_of(p), 1.0);
    const Vector f = p.field.eval(z);
    EXPECT_LE((mm.grad_x(mm.x_part(z), mm.y_part(z)) - mm.x_part(f)).norm(), 1e-12) << p.name;
    EXPECT_LE((mm.grad_y(mm.x_part(z), mm.y_part(z)) + mm.y_part(f)).norm(), 1e-12) << p.name;
  }
}

TEST(Problems, DefaultStarts) {
  const TestProblem game = make_problem(make_spec(ProblemKind::kMatrixGame, 4, 1));
  EXPECT_TRUE(default_start(game).isApproxToConstant(0.25));
  EXPECT_TRUE(game.set.contains(default_start(game)));
  const TestProblem cubic = make_problem(make_spec(ProblemKind::kCubicReg, 2, 1));
  EXPECT_EQ(default_start(cubic), Vector::Unit(4, 0));
}
