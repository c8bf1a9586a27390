#pragma once

#include <string>
#include <variant>
#include <vector>

#include "homp/types.hpp"

namespace homp {

struct WholeSpace {
  int n = 0;
};

struct Box {
  Vector lower;
  Vector upper;
};

struct Ball {
  Vector center;
  double radius = 1.0;
};

struct Simplex {
  int n = 0;
};

using SetBlock = std::variant<WholeSpace, Box, Ball, Simplex>;

int block_dim(const SetBlock& block);

/// Feasible set Z, stored as a Cartesian product of one or more blocks laid
/// out consecutively in the stacked coordinates.
class ConstraintSet {
 public:
  static ConstraintSet whole_space(int n);
  static ConstraintSet box(Vector lower, Vector upper);
  static ConstraintSet ball(Vector center, double radius);
  static ConstraintSet simplex(int n);
  static ConstraintSet product(const std::vector<ConstraintSet>& factors);

  int dim() const { return dim_; }
  const std::vector<SetBlock>& blocks() const { return blocks_; }
  bool is_whole_space() const;
  bool is_bounded() const;

  bool contains(const Vector& z, double tol = 1e-12) const;

  /// max_{z in Z} <direction, z>; +inf for unbounded blocks unless the
  /// direction vanishes there.
  double support(const Vector& direction) const;

  std::string describe() const;

 private:
  explicit ConstraintSet(std::vector<SetBlock> blocks);

  std::vector<SetBlock> blocks_;
  int dim_ = 0;
};

enum class BregmanKind { kSquaredEuclidean, kNegativeEntropy };

/// Distance-generating function d and its Bregman divergence
/// D(u, v) = d(u) - d(v) - <grad d(v), u - v>.
class BregmanGeometry {
 public:
  static BregmanGeometry squared_euclidean() { return BregmanGeometry(BregmanKind::kSquaredEuclidean); }
  static BregmanGeometry negative_entropy() { return BregmanGeometry(BregmanKind::kNegativeEntropy); }

  BregmanKind kind() const { return kind_; }
  std::string name() const;

  double d(const Vector& u) const;
  Vector grad_d(const Vector& u) const;
  double divergence(const Vector& u, const Vector& v) const;

 private:
  explicit BregmanGeometry(BregmanKind kind) : kind_(kind) {}
  BregmanKind kind_;
};

/// Entropy coordinates are clamped from below at this value before logs.
inline constexpr double kEntropyFloor = 1e-300;

double bregman(const BregmanGeometry& geometry, const Vector& u, const Vector& v);

/// Throws ConfigurationError unless every block of `set` has a closed-form
/// prox under `geometry`: squared Euclidean with whole space, box or ball;
/// negative entropy with simplex.
void require_supported(const BregmanGeometry& geometry, const ConstraintSet& set);

/// argmin_{z in set} <g, z - z0> + D(z, z0).
Vector prox_step(const BregmanGeometry& geometry, const ConstraintSet& set, const Vector& z0, const Vector& g);

}  // namespace homp
