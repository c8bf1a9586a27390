#include "homp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace homp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_block(const SetBlock& block) {
  std::visit(Overloaded{
                 [](const WholeSpace& s) {
                   if (s.n < 1) throw ConfigurationError("whole_space: dimension must be >= 1");
                 },
                 [](const Box& b) {
                   if (b.lower.size() != b.upper.size() || b.lower.size() < 1)
                     throw ConfigurationError("box: lower/upper size mismatch");
                   if ((b.lower.array() > b.upper.array()).any())
                     throw ConfigurationError("box: lower must be <= upper coordinatewise");
                 },
                 [](const Ball& b) {
                   if (b.center.size() < 1) throw ConfigurationError("ball: empty center");
                   if (!(b.radius > 0.0)) throw ConfigurationError("ball: radius must be > 0");
                 },
                 [](const Simplex& s) {
                   if (s.n < 1) throw ConfigurationError("simplex: dimension must be >= 1");
                 },
             },
             block);
}

}  // namespace

int block_dim(const SetBlock& block) {
  return std::visit(Overloaded{
                        [](const WholeSpace& s) { return s.n; },
                        [](const Box& b) { return static_cast<int>(b.lower.size()); },
                        [](const Ball& b) { return static_cast<int>(b.center.size()); },
                        [](const Simplex& s) { return s.n; },
                    },
                    block);
}

ConstraintSet::ConstraintSet(std::vector<SetBlock> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw ConfigurationError("ConstraintSet: no blocks");
  for (const SetBlock& b : blocks_) {
    validate_block(b);
    dim_ += block_dim(b);
  }
}

ConstraintSet ConstraintSet::whole_space(int n) { return ConstraintSet({WholeSpace{n}}); }
ConstraintSet ConstraintSet::box(Vector lower, Vector upper) {
  return ConstraintSet({Box{std::move(lower), std::move(upper)}});
}
ConstraintSet ConstraintSet::ball(Vector center, double radius) {
  return ConstraintSet({Ball{std::move(center), radius}});
}
ConstraintSet ConstraintSet::simplex(int n) { return ConstraintSet({Simplex{n}}); }

ConstraintSet ConstraintSet::product(const std::vector<ConstraintSet>& factors) {
  std::vector<SetBlock> blocks;
  for (const ConstraintSet& f : factors) blocks.insert(blocks.end(), f.blocks_.begin(), f.blocks_.end());
  return ConstraintSet(std::move(blocks));
}

bool ConstraintSet::is_whole_space() const {
  return std::all_of(blocks_.begin(), blocks_.end(),
                     [](const SetBlock& b) { return std::holds_alternative<WholeSpace>(b); });
}

bool ConstraintSet::is_bounded() const {
  return std::none_of(blocks_.begin(), blocks_.end(),
                      [](const SetBlock& b) { return std::holds_alternative<WholeSpace>(b); });
}

bool ConstraintSet::contains(const Vector& z, double tol) const {
  if (z.size() != dim_ || !z.allFinite()) return false;
  int offset = 0;
  for (const SetBlock& block : blocks_) {
    const int n = block_dim(block);
    const auto seg = z.segment(offset, n);
    offset += n;
    const bool ok = std::visit(
        Overloaded{
            [](const WholeSpace&) { return true; },
            [&](const Box& b) {
              return ((seg.array() >= b.lower.array() - tol) && (seg.array() <= b.upper.array() + tol)).all();
            },
            [&](const Ball& b) { return (seg - b.center).norm() <= b.radius * (1.0 + tol) + tol; },
            [&](const Simplex&) { return (seg.array() >= -tol).all() && std::abs(seg.sum() - 1.0) <= tol; },
        },
        block);
    if (!ok) return false;
  }
  return true;
}

double ConstraintSet::support(const Vector& direction) const {
  if (direction.size() != dim_) throw ConfigurationError("ConstraintSet::support: dimension mismatch");
  double total = 0.0;
  int offset = 0;
  for (const SetBlock& block : blocks_) {
    const int n = block_dim(block);
    const Vector d = direction.segment(offset, n);
    offset += n;
    total += std::visit(Overloaded{
                            [&](const WholeSpace&) { return d.isZero(0.0) ? 0.0 : kInf; },
                            [&](const Box& b) {
                              double s = 0.0;
                              for (int i = 0; i < n; ++i) s += d[i] >= 0.0 ? d[i] * b.upper[i] : d[i] * b.lower[i];
                              return s;
                            },
                            [&](const Ball& b) { return d.dot(b.center) + b.radius * d.norm(); },
                            [&](const Simplex&) { return d.maxCoeff(); },
                        },
                        block);
  }
  return total;
}

std::string ConstraintSet::describe() const {
  std::string out;
  for (const SetBlock& block : blocks_) {
    if (!out.empty()) out += " x ";
    out += std::visit(Overloaded{
                          [](const WholeSpace& s) { return fmt::format("R^{}", s.n); },
                          [](const Box& b) { return fmt::format("box({})", b.lower.size()); },
                          [](const Ball& b) { return fmt::format("ball({}, r={})", b.center.size(), b.radius); },
                          [](const Simplex& s) { return fmt::format("simplex({})", s.n); },
                      },
                      block);
  }
  return out;
}

std::string BregmanGeometry::name() const {
  return kind_ == BregmanKind::kSquaredEuclidean ? "squared_euclidean" : "negative_entropy";
}

double BregmanGeometry::d(const Vector& u) const {
  if (kind_ == BregmanKind::kSquaredEuclidean) return 0.5 * u.squaredNorm();
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] < 0.0) throw DomainError("negative_entropy: negative coordinate");
    if (u[i] > 0.0) s += u[i] * std::log(u[i]);
  }
  return s;
}

Vector BregmanGeometry::grad_d(const Vector& u) const {
  if (kind_ == BregmanKind::kSquaredEuclidean) return u;
  Vector g(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0)) throw DomainError("negative_entropy: gradient undefined at a zero coordinate");
    g[i] = std::log(u[i]) + 1.0;
  }
  return g;
}

double BregmanGeometry::divergence(const Vector& u, const Vector& v) const {
  if (u.size() != v.size()) throw ConfigurationError("bregman: dimension mismatch");
  if (kind_ == BregmanKind::kSquaredEuclidean) return 0.5 * (u - v).squaredNorm();
  // sum u log(u/v) - u + v, the entropy divergence written without cancellation.
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(v[i] > 0.0)) throw DomainError("negative_entropy: divergence needs v in the relative interior");
    if (u[i] < 0.0) throw DomainError("negative_entropy: negative coordinate");
    if (u[i] > 0.0) s += u[i] * std::log(u[i] / v[i]);
    s += v[i] - u[i];
  }
  return std::max(s, 0.0);
}

double bregman(const BregmanGeometry& geometry, const Vector& u, const Vector& v) {
  return geometry.divergence(u, v);
}

void require_supported(const BregmanGeometry& geometry, const ConstraintSet& set) {
  for (const SetBlock& block : set.blocks()) {
    const bool simplex = std::holds_alternative<Simplex>(block);
    const bool entropy = geometry.kind() == BregmanKind::kNegativeEntropy;
    if (simplex != entropy) {
      throw ConfigurationError(
          fmt::format("prox_step: unsupported pairing of {} geometry with set {}", geometry.name(), set.describe()));
    }
  }
}

Vector prox_step(const BregmanGeometry& geometry, const ConstraintSet& set, const Vector& z0, const Vector& g) {
  require_supported(geometry, set);
  if (z0.size() != set.dim() || g.size() != set.dim()) {
    throw ConfigurationError("prox_step: dimension mismatch");
  }
  if (!g.allFinite()) throw DomainError("prox_step: non-finite gradient");
  Vector out(z0.size());
  int offset = 0;
  for (const SetBlock& block : set.blocks()) {
    const int n = block_dim(block);
    const Vector base = z0.segment(offset, n);
    const Vector grad = g.segment(offset, n);
    out.segment(offset, n) = std::visit(
        Overloaded{
            [&](const WholeSpace&) -> Vector { return base - grad; },
            [&](const Box& b) -> Vector { return (base - grad).cwiseMax(b.lower).cwiseMin(b.upper); },
            [&](const Ball& b) -> Vector {
              const Vector shifted = base - grad - b.center;
              const double norm = shifted.norm();
              if (norm <= b.radius) return b.center + shifted;
              return b.center + (b.radius / norm) * shifted;
            },
            [&](const Simplex&) -> Vector {
              // z_i proportional to z0_i exp(-g_i), evaluated in log space.
              Vector logits(n);
              for (int i = 0; i < n; ++i) logits[i] = std::log(std::max(base[i], kEntropyFloor)) - grad[i];
              const double shift = logits.maxCoeff();
              Vector w = (logits.array() - shift).exp().matrix();
              w /= w.sum();
              return w.cwiseMax(kEntropyFloor) / w.cwiseMax(kEntropyFloor).sum();
            },
        },
        block);
    offset += n;
  }
  return out;
}

}  // namespace homp
