#include <gtest/gtest.h>

#include <cstring>

#include "homp/problems.hpp"
#include "homp/vectorfield.hpp"

using namespace homp;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// F(x) = x^3 with analytic derivatives up to order 3.
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

Matrix rotation() {
  Matrix m(2, 2);
  m << 0, 1, -1, 0;
  return m;
}

}  // namespace

TEST(GdaField, ScalarBilinear) {
  // g(x, y) = x y
  const VectorField f = gda_field(
      1, 1, [](const Vector&, const Vector& y) -> Vector { return y; },
      [](const Vector& x, const Vector&) -> Vector { return x; });
  const Vector v = f.eval(vec({2, 3}));
  EXPECT_DOUBLE_EQ(v[0], 3);
  EXPECT_DOUBLE_EQ(v[1], -2);
  EXPECT_TRUE(f.jacobian(vec({5, -7})).isApprox(rotation(), 1e-8));
}

TEST(GdaField, InnerProduct) {
  const VectorField f = gda_field(
      2, 2, [](const Vector&, const Vector& y) -> Vector { return y; },
      [](const Vector& x, const Vector&) -> Vector { return x; });
  const Vector v = f.eval(vec({1, 0, 0, 1}));
  EXPECT_TRUE(v.isApprox(vec({0, 1, -1, 0})));
}

TEST(GdaField, DimensionMismatch) {
  EXPECT_THROW(gda_field(
                   2, 1, [](const Vector&, const Vector& y) -> Vector { return y; },
                   [](const Vector& x, const Vector&) -> Vector { return x; }),
               ConfigurationError);
}

TEST(GdaField, MatchesProblemFields) {
  for (ProblemKind kind : {ProblemKind::kBilinear, ProblemKind::kCubicReg, ProblemKind::kQuarticReg}) {
    ProblemSpec spec;
    spec.kind = kind;
    spec.n = 3;
    spec.seed = 4;
    const TestProblem p = make_problem(spec);
    const VectorField g = gda_field(3, 3, p.minmax->grad_x, p.minmax->grad_y);
    Rng rng(9);
    for (int k = 0; k < 20; ++k) {
      const Vector z = rng.uniform_vector(6, -2, 2);
      EXPECT_LE((g.eval(z) - p.field.eval(z)).norm(), 1e-13) << to_string(kind);
    }
  }
}

TEST(Taylor, LinearFieldIsExact) {
  Rng rng(2);
  const Matrix m = rng.uniform_matrix(4, 4, -1, 1);
  const VectorField f = VectorField::linear(m, rng.uniform_vector(4, -1, 1));
  const Vector u = rng.uniform_vector(4, -1, 1);
  const Vector v = rng.uniform_vector(4, -1, 1);
  for (int k = 1; k <= 4; ++k) EXPECT_LE((taylor_eval(f, u, v, k) - f.eval(v)).norm(), 1e-14);
}

TEST(Taylor, CubeByHand) {
  const VectorField f = cube_field();
  EXPECT_DOUBLE_EQ(taylor_eval(f, vec({1}), vec({1.5}), 1)[0], 2.5);
  const double t2 = taylor_eval(f, vec({1}), vec({1.5}), 2)[0];
  EXPECT_DOUBLE_EQ(t2, 3.25);
  // Remainder equals (L_3 / 3!) |v - u|^3 with L_3 = 6.
  EXPECT_DOUBLE_EQ(std::abs(3.375 - t2), 6.0 / 6.0 * 0.125);
}

TEST(Taylor, OrderAboveMaxRejected) {
  const VectorField f(1, [](const Vector& z) -> Vector { return z; });
  EXPECT_EQ(f.max_order(), 2);
  EXPECT_THROW(taylor_eval(f, vec({0}), vec({1}), 3), UnsupportedOrderError);
  EXPECT_THROW(f.dir_derivative(3, vec({0}), vec({1})), UnsupportedOrderError);
}

TEST(Derivatives, FirstOrderIsJacobianProduct) {
  ProblemSpec spec;
  spec.kind = ProblemKind::kQuarticReg;
  spec.n = 3;
  spec.seed = 1;
  const TestProblem p = make_problem(spec);
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const Vector u = rng.uniform_vector(6, -2, 2);
    const Vector h = rng.uniform_vector(6, -1, 1);
    const Vector a = p.field.dir_derivative(1, u, h);
    const Vector b = p.field.jacobian(u) * h;
    EXPECT_LE((a - b).norm(), 1e-10 * (1 + b.norm()));
  }
}

TEST(Derivatives, FiniteDifferenceSecondOrderFallback) {
  // Analytic Jacobian only; d^2 F comes from differencing it.
  const VectorField f(
      1, [](const Vector& z) -> Vector { return z.array().cube().matrix(); },
      [](const Vector& z) -> Matrix { return Matrix::Constant(1, 1, 3 * z[0] * z[0]); });
  EXPECT_NEAR(f.dir_derivative(2, vec({2}), vec({1}))[0], 12.0, 1e-6);
}

TEST(Jacobian, AgreesWithFiniteDifferences) {
  for (ProblemKind kind : {ProblemKind::kCubicReg, ProblemKind::kQuarticReg, ProblemKind::kMonotoneQuadratic}) {
    ProblemSpec spec;
    spec.kind = kind;
    spec.n = 4;
    spec.seed = 17;
    const TestProblem p = make_problem(spec);
    Rng rng(23);
    for (int k = 0; k < 100; ++k) {
      const Vector z = rng.uniform_vector(p.dim(), -2, 2);
      const Matrix j = p.field.jacobian(z);
      EXPECT_LE((j - finite_difference_jacobian(p.field, z)).norm(), 1e-5 * (1 + j.norm()));
    }
  }
}

TEST(CheckMonotone, Rotation) {
  const VectorField f = VectorField::linear(rotation());
  const MonotonicityReport r = check_monotone(f, ball_pair_sampler(Vector::Zero(2), 3, 1), 200, 1e-12);
  EXPECT_TRUE(r.monotone);
  EXPECT_NEAR(r.min_inner, 0.0, 1e-12);
}

TEST(CheckMonotone, NegativeIdentityHasWitness) {
  const VectorField f = VectorField::linear(-Matrix::Identity(2, 2));
  const MonotonicityReport r = check_monotone(f, ball_pair_sampler(Vector::Zero(2), 1, 2), 50, 1e-12);
  EXPECT_FALSE(r.monotone);
  const double inner = (f.eval(r.worst_u) - f.eval(r.worst_v)).dot(r.worst_u - r.worst_v);
  EXPECT_DOUBLE_EQ(inner, r.min_inner);
  EXPECT_NEAR(inner, -(r.worst_u - r.worst_v).squaredNorm(), 1e-14);
}

TEST(CheckMonotone, CubicRegularized) {
  ProblemSpec spec;
  spec.kind = ProblemKind::kCubicReg;
  spec.n = 4;
  spec.seed = 7;
  const TestProblem p = make_problem(spec);
  const MonotonicityReport r = check_monotone(p.field, ball_pair_sampler(Vector::Zero(8), 3, 8), 1000, 1e-12);
  EXPECT_TRUE(r.monotone) << r.min_inner;
}

TEST(Smoothness, Validate) {
  SmoothnessSpec s;
  s.lipschitz[2] = 1.0;
  EXPECT_NO_THROW(s.validate());
  s.lipschitz[3] = -1.0;
  EXPECT_THROW(s.validate(), ConfigurationError);
}

TEST(VectorFieldTest, DimensionChecked) {
  const VectorField f = VectorField::linear(rotation());
  EXPECT_THROW(f.eval(Vector::Zero(3)), ConfigurationError);
}

TEST(VectorFieldTest, DeterministicEvaluation) {
  ProblemSpec spec;
  spec.kind = ProblemKind::kCubicReg;
  spec.n = 5;
  const TestProblem p = make_problem(spec);
  const Vector z = Vector::LinSpaced(10, -1, 1);
  const Vector a = p.field.eval(z);
  const Vector b = p.field.eval(z);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * 10));
}
