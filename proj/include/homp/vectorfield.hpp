#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>

#include "homp/types.hpp"

namespace homp {

/// Operator F : R^n -> R^n together with whatever derivative information the
/// owner can supply. Immutable once built; all callbacks must be reentrant.
class VectorField {
 public:
  using EvalFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;
  /// Symmetric multilinear form d^k F(u)[h_1, ..., h_k] with k = dirs.size() >= 2.
  using DerivativeFn = std::function<Vector(const Vector& u, std::span<const Vector> dirs)>;

  /// max_order for fields whose derivatives above some order vanish identically.
  static constexpr int kUnboundedOrder = 64;

  /// Without `higher`, second derivatives come from central differences of the
  /// Jacobian and max_order is capped at 2.
  VectorField(int dim, EvalFn eval, JacobianFn jacobian = {}, DerivativeFn higher = {},
              int max_order = 2);

  /// F(z) = m z + offset. All derivatives of order >= 2 are zero.
  static VectorField linear(Matrix m, Vector offset);
  static VectorField linear(Matrix m) {
    const auto n = m.rows();
    return linear(std::move(m), Vector::Zero(n));
  }

  int dim() const { return dim_; }
  int max_order() const { return max_order_; }
  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }

  Vector eval(const Vector& z) const;
  Matrix jacobian(const Vector& z) const;

  /// d^k F(u)[dirs...] for k = dirs.size(). k = 1 is the Jacobian product.
  Vector derivative(const Vector& u, std::span<const Vector> dirs) const;

  /// d^k F(u)[h]^k.
  Vector dir_derivative(int order, const Vector& u, const Vector& h) const;

 private:
  void check_point(const Vector& z) const;

  int dim_;
  EvalFn eval_;
  JacobianFn jacobian_;
  DerivativeFn higher_;
  int max_order_;
};

/// Gradient of g(x, y) with respect to one block.
using BlockGradient = std::function<Vector(const Vector& x, const Vector& y)>;

/// Gradient descent-ascent field F(x, y) = (grad_x g, -grad_y g) on
/// R^{n_x + n_y}. Without `jacobian` the Jacobian is taken by central
/// differences. Throws ConfigurationError when a gradient returns the wrong
/// length (checked once at the origin).
VectorField gda_field(int n_x, int n_y, BlockGradient grad_x, BlockGradient grad_y,
                      VectorField::JacobianFn jacobian = {});

/// Central-difference Jacobian with step 1e-5 * (1 + |z|).
Matrix finite_difference_jacobian(const VectorField& field, const Vector& z);

/// sum_{i=0}^{order} (1/i!) d^i F(u)[v - u]^i.
Vector taylor_eval(const VectorField& field, const Vector& u, const Vector& v, int order);

/// Lipschitz constants of the derivatives of F, keyed by smoothness order p
/// (L_p bounds the variation of the (p-1)-th derivative).
struct SmoothnessSpec {
  std::map<int, double> lipschitz;
  /// Lower bound on sigma_min of the Jacobian along trajectories.
  double mu = 0.0;
  /// Radius around the solution on which local constants hold.
  double domain_radius = std::numeric_limits<double>::infinity();

  std::optional<double> constant(int order) const {
    const auto it = lipschitz.find(order);
    if (it == lipschitz.end()) return std::nullopt;
    return it->second;
  }

  void validate() const;
};

using PointPairSampler = std::function<std::pair<Vector, Vector>()>;

/// Independent uniform draws from the ball for both points of each pair.
PointPairSampler ball_pair_sampler(Vector center, double radius, std::uint64_t seed);

struct MonotonicityReport {
  double min_inner = std::numeric_limits<double>::infinity();
  Vector worst_u;
  Vector worst_v;
  int samples = 0;
  bool monotone = true;
};

/// Minimum of <F(u) - F(v), u - v> over sampled pairs; monotone iff >= -tol.
MonotonicityReport check_monotone(const VectorField& field, const PointPairSampler& sampler, int samples,
                                  double tol);

}  // namespace homp
