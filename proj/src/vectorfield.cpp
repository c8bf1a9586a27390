#include "homp/vectorfield.hpp"

#include <cmath>
#include <memory>
#include <vector>

#include <fmt/format.h>

namespace homp {
namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double fd_step(const Vector& z) { return 1e-5 * (1.0 + z.norm()); }

}  // namespace

VectorField::VectorField(int dim, EvalFn eval, JacobianFn jacobian, DerivativeFn higher, int max_order)
    : dim_(dim),
      eval_(std::move(eval)),
      jacobian_(std::move(jacobian)),
      higher_(std::move(higher)),
      max_order_(max_order) {
  if (dim_ < 1) throw ConfigurationError(fmt::format("VectorField: dimension must be >= 1, got {}", dim_));
  if (!eval_) throw ConfigurationError("VectorField: eval callback is required");
  if (max_order_ < 1) throw ConfigurationError("VectorField: max_order must be >= 1");
  if (!higher_ && max_order_ > 2) max_order_ = 2;
}

VectorField VectorField::linear(Matrix m, Vector offset) {
  if (m.rows() != m.cols() || m.rows() != offset.size()) {
    throw ConfigurationError("VectorField::linear: shape mismatch");
  }
  const int n = static_cast<int>(m.rows());
  auto shared = std::make_shared<const std::pair<Matrix, Vector>>(std::move(m), std::move(offset));
  return VectorField(
      n, [shared](const Vector& z) -> Vector { return shared->first * z + shared->second; },
      [shared](const Vector&) -> Matrix { return shared->first; },
      [n](const Vector&, std::span<const Vector>) -> Vector { return Vector::Zero(n); }, kUnboundedOrder);
}

void VectorField::check_point(const Vector& z) const {
  if (z.size() != dim_) {
    throw ConfigurationError(fmt::format("VectorField: point has dimension {}, expected {}", z.size(), dim_));
  }
}

Vector VectorField::eval(const Vector& z) const {
  check_point(z);
  return eval_(z);
}

Matrix VectorField::jacobian(const Vector& z) const {
  check_point(z);
  if (jacobian_) return jacobian_(z);
  return finite_difference_jacobian(*this, z);
}

Vector VectorField::derivative(const Vector& u, std::span<const Vector> dirs) const {
  check_point(u);
  const int order = static_cast<int>(dirs.size());
  if (order < 1) throw UsageError("VectorField::derivative: need at least one direction");
  if (order > max_order_) {
    throw UnsupportedOrderError(
        fmt::format("VectorField: derivative of order {} requested, field supplies up to {}", order, max_order_));
  }
  for (const Vector& h : dirs) check_point(h);
  if (order == 1) return jacobian(u) * dirs[0];
  if (higher_) return higher_(u, dirs);
  // order == 2 without an analytic form: difference the Jacobian along dirs[0].
  const double norm = dirs[0].norm();
  if (norm == 0.0) return Vector::Zero(dim_);
  const double eps = fd_step(u) / norm;
  const Matrix jp = jacobian(u + eps * dirs[0]);
  const Matrix jm = jacobian(u - eps * dirs[0]);
  return (jp - jm) * dirs[1] / (2.0 * eps);
}

Vector VectorField::dir_derivative(int order, const Vector& u, const Vector& h) const {
  if (order < 1) throw UsageError("dir_derivative: order must be >= 1");
  std::vector<Vector> dirs(static_cast<std::size_t>(order), h);
  return derivative(u, dirs);
}

Matrix finite_difference_jacobian(const VectorField& field, const Vector& z) {
  const int n = field.dim();
  const double h = fd_step(z);
  Matrix jac(n, n);
  Vector zp = z;
  Vector zm = z;
  for (int j = 0; j < n; ++j) {
    zp[j] = z[j] + h;
    zm[j] = z[j] - h;
    jac.col(j) = (field.eval(zp) - field.eval(zm)) / (2.0 * h);
    zp[j] = z[j];
    zm[j] = z[j];
  }
  return jac;
}

Vector taylor_eval(const VectorField& field, const Vector& u, const Vector& v, int order) {
  if (order < 0) throw UsageError("taylor_eval: order must be >= 0");
  if (order > field.max_order()) {
    throw UnsupportedOrderError(
        fmt::format("taylor_eval: order {} exceeds the field's max order {}", order, field.max_order()));
  }
  if (u.size() != v.size()) throw ConfigurationError("taylor_eval: dimension mismatch");
  const Vector h = v - u;
  Vector result = field.eval(u);
  for (int i = 1; i <= order; ++i) {
    result += field.dir_derivative(i, u, h) / factorial(i);
  }
  return result;
}

void SmoothnessSpec::validate() const {
  for (const auto& [order, value] : lipschitz) {
    if (order < 1) throw ConfigurationError(fmt::format("smoothness order must be >= 1, got {}", order));
    if (!(value >= 0.0)) throw ConfigurationError(fmt::format("L_{} must be >= 0, got {}", order, value));
  }
  if (!(mu >= 0.0)) throw ConfigurationError("smoothness mu must be >= 0");
  if (!(domain_radius > 0.0)) throw ConfigurationError("smoothness domain_radius must be > 0");
}

PointPairSampler ball_pair_sampler(Vector center, double radius, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng, center = std::move(center), radius]() {
    Vector u = rng->in_ball(center, radius);
    Vector v = rng->in_ball(center, radius);
    return std::make_pair(std::move(u), std::move(v));
  };
}

MonotonicityReport check_monotone(const VectorField& field, const PointPairSampler& sampler, int samples,
                                  double tol) {
  MonotonicityReport report;
  for (int k = 0; k < samples; ++k) {
    auto [u, v] = sampler();
    const double inner = (field.eval(u) - field.eval(v)).dot(u - v);
    if (inner < report.min_inner) {
      report.min_inner = inner;
      report.worst_u = u;
      report.worst_v = v;
    }
    ++report.samples;
  }
  report.monotone = report.samples == 0 || report.min_inner >= -tol;
  return report;
}

VectorField gda_field(int n_x, int n_y, BlockGradient grad_x, BlockGradient grad_y,
                      VectorField::JacobianFn jacobian) {
  if (n_x < 1 || n_y < 1) throw ConfigurationError("gda_field: block dimensions must be >= 1");
  if (!grad_x || !grad_y) throw ConfigurationError("gda_field: both gradients are required");
  const Vector x0 = Vector::Zero(n_x);
  const Vector y0 = Vector::Zero(n_y);
  if (grad_x(x0, y0).size() != n_x || grad_y(x0, y0).size() != n_y) {
    throw ConfigurationError(fmt::format("gda_field: gradients do not match block dimensions ({}, {})", n_x, n_y));
  }
  auto eval = [n_x, n_y, gx = std::move(grad_x), gy = std::move(grad_y)](const Vector& z) -> Vector {
    const Vector x = z.head(n_x);
    const Vector y = z.tail(n_y);
    Vector f(n_x + n_y);
    f << gx(x, y), -gy(x, y);
    return f;
  };
  return VectorField(n_x + n_y, std::move(eval), std::move(jacobian));
}

}  // namespace homp
