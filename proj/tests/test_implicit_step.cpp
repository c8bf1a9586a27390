#include <gtest/gtest.h>

#include <cmath>

#include "homp/implicit_step.hpp"
#include "homp/problems.hpp"

using namespace homp;

namespace {

VectorField cube_field() {
  return VectorField(
      1, [](const Vector& z) -> Vector { return z.array().cube().matrix(); },
      [](const Vector& z) -> Matrix { return Matrix::Constant(1, 1, 3 * z[0] * z[0]); },
      [](const Vector& u, std::span<const Vector> dirs) -> Vector {
        if (dirs.size() == 2) return Vector::Constant(1, 6 * u[0] * dirs[0][0] * dirs[1][0]);
        if (dirs.size() == 3) return Vector::Constant(1, 6 * dirs[0][0] * dirs[1][0] * dirs[2][0]);
        return Vector::Zero(1);
      },
      VectorField::kUnboundedOrder);
}

std::vector<TestProblem> probe_problems() {
  std::vector<TestProblem> out;
  for (ProblemKind kind : {ProblemKind::kMonotoneQuadratic, ProblemKind::kCubicReg, ProblemKind::kQuarticReg,
                           ProblemKind::kBilinear}) {
    for (std::uint64_t seed : {1u, 2u}) {
      ProblemSpec spec;
      spec.kind = kind;
      spec.n = 3 + static_cast<int>(seed);
      spec.seed = seed;
      out.push_back(make_problem(spec));
    }
  }
  return out;
}

}  // namespace

TEST(ImplicitStepP2, ZeroStep) {
  Vector z(2);
  z << 0.3, -4;
  const VectorField f = VectorField::linear(Matrix::Identity(2, 2));
  EXPECT_EQ(implicit_step_p2(f, z, 0.0), z);
}

TEST(ImplicitStepP2, ScalarResolvent) {
  const VectorField f = VectorField::linear(Matrix::Identity(1, 1));
  EXPECT_DOUBLE_EQ(implicit_step_p2(f, Vector::Constant(1, 2.0), 1.0)[0], 1.0);
}

TEST(ImplicitStepP2, RotationByHand) {
  Matrix m(2, 2);
  m << 0, 1, -1, 0;
  Vector z(2);
  z << 1, 0;
  const Vector zhat = implicit_step_p2(VectorField::linear(m), z, 1.0);
  EXPECT_NEAR(zhat[0], 0.5, 1e-15);
  EXPECT_NEAR(zhat[1], 0.5, 1e-15);
}

TEST(ImplicitStepP2, SingularSystem) {
  const VectorField f = VectorField::linear(-Matrix::Identity(2, 2));
  EXPECT_THROW(implicit_step_p2(f, Vector::Ones(2), 1.0), LinearSolveError);
  EXPECT_THROW(implicit_step_p2(f, Vector::Ones(2), -1.0), UsageError);
}

TEST(ImplicitStepP2, ResidualOnRandomProbes) {
  const std::vector<TestProblem> problems = probe_problems();
  Rng rng(404);
  for (int k = 0; k < 1000; ++k) {
    const TestProblem& p = problems[static_cast<std::size_t>(k) % problems.size()];
    const Vector z = rng.uniform_vector(p.dim(), -2, 2);
    const double gamma = std::pow(10.0, rng.uniform(-3, 3));
    const ResolventStep step(p.field, z);
    const Vector zhat = step.zhat(gamma);
    // Independent residual of gamma (F + J (w - z)) + w - z.
    const Vector r = gamma * (p.field.eval(z) + p.field.jacobian(z) * (zhat - z)) + zhat - z;
    EXPECT_LE(r.norm(), 1e-10 * (1 + gamma * p.field.eval(z).norm())) << p.name;
  }
}

TEST(ImplicitStepGeneral, ZeroStep) {
  const ImplicitStep s = implicit_step_general(cube_field(), 3, Vector::Constant(1, 1.0), 0.0, 1e-12, 20);
  EXPECT_EQ(s.zhat[0], 1.0);
  EXPECT_EQ(s.residual, 0.0);
  EXPECT_EQ(s.iterations, 0);
}

TEST(ImplicitStepGeneral, ScalarCubeByHand) {
  // 3 h^2 + 4 h + 1 = 0 with h = zhat - 1; the root nearer 0 is -1/3.
  const ImplicitStep s = implicit_step_general(cube_field(), 3, Vector::Constant(1, 1.0), 1.0, 1e-14, 50);
  EXPECT_NEAR(s.zhat[0], 2.0 / 3.0, 1e-10);
}

TEST(ImplicitStepGeneral, LinearFieldAnyOrderMatchesP2) {
  Rng rng(8);
  Matrix g = rng.uniform_matrix(4, 4, -1, 1);
  const Matrix m = g.transpose() * g / 4 + (g - g.transpose());
  const VectorField f = VectorField::linear(m, rng.uniform_vector(4, -1, 1));
  const Vector z = rng.uniform_vector(4, -1, 1);
  const Vector ref = implicit_step_p2(f, z, 0.8);
  for (int p = 2; p <= 5; ++p) {
    EXPECT_LE((implicit_step_general(f, p, z, 0.8, 1e-13, 20).zhat - ref).norm(), 1e-10);
  }
}

TEST(ImplicitStepGeneral, P2MatchesExplicitOnProbes) {
  const std::vector<TestProblem> problems = probe_problems();
  Rng rng(99);
  for (int k = 0; k < 100; ++k) {
    const TestProblem& p = problems[static_cast<std::size_t>(k) % problems.size()];
    const Vector z = rng.uniform_vector(p.dim(), -2, 2);
    const double gamma = std::pow(10.0, rng.uniform(-2, 2));
    const Vector a = implicit_step_p2(p.field, z, gamma);
    const ImplicitStep b = implicit_step_general(p.field, 2, z, gamma, 1e-12, 50);
    EXPECT_LE((a - b.zhat).norm(), 1e-8 * (1 + a.norm())) << p.name;
  }
}

TEST(ImplicitStepGeneral, QuarticThirdOrderResidual) {
  ProblemSpec spec;
  spec.kind = ProblemKind::kQuarticReg;
  spec.n = 3;
  spec.seed = 11;
  const TestProblem p = make_problem(spec);
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const Vector z = rng.uniform_vector(6, -1.5, 1.5);
    // Small enough that the quadratic model keeps a root near z.
    const double gamma = std::pow(10.0, rng.uniform(-2, -0.5));
    const ImplicitStep s = implicit_step_general(p.field, 3, z, gamma, 1e-12, 50);
    // Independent residual: w - z + gamma T_2(w; z).
    const Vector r = s.zhat - z + gamma * taylor_eval(p.field, z, s.zhat, 2);
    EXPECT_LE(r.norm(), 1e-12 * (1 + gamma * p.field.eval(z).norm()) * 1.01);
    EXPECT_NEAR(r.norm(), s.residual, 1e-14 * (1 + r.norm()));
  }
}

TEST(ImplicitStepGeneral, Errors) {
  ProblemSpec spec;
  spec.kind = ProblemKind::kCubicReg;
  spec.n = 2;
  const TestProblem p = make_problem(spec);
  EXPECT_THROW(implicit_step_general(p.field, 4, Vector::Ones(4), 1.0, 1e-10, 10), UnsupportedOrderError);
  EXPECT_THROW(implicit_step_general(p.field, 1, Vector::Ones(4), 1.0, 1e-10, 10), ConfigurationError);
  EXPECT_THROW(implicit_step_general(cube_field(), 3, Vector::Constant(1, 1.0), 1.0, 1e-14, 0), OracleFailure);
}
