#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "homp/geometry.hpp"
#include "homp/report.hpp"
#include "homp/vectorfield.hpp"

namespace homp {

struct MinMaxProblem;

/// Bounded set of reference points z over which the averaged gap
/// (1/Gamma) sum gamma_t <F(zhat_t), zhat_t - z> is maximized.
class ReferenceRegion {
 public:
  static ReferenceRegion ball(Vector center, double radius);
  static ReferenceRegion constraint_set(ConstraintSet set);
  static ReferenceRegion sample_cloud(std::vector<Vector> points);

  /// Ball around z1 of radius 2|z1 - z*| (z* known and distinct from z1),
  /// else 2|z1| + 1.
  static ReferenceRegion default_for(const Vector& z1, const std::optional<Vector>& z_star);

  /// max_{z in region} <direction, z>.
  double support(const Vector& direction) const;

  std::string describe() const;

  using Kind = std::variant<Ball, ConstraintSet, std::vector<Vector>>;
  const Kind& kind() const { return kind_; }

 private:
  explicit ReferenceRegion(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// R_ref = 2|z1 - z*| when z* is known (and differs from z1), else 2|z1| + 1.
double reference_radius(const Vector& z1, const std::optional<Vector>& z_star);

/// max over the region of (1/Gamma) sum gamma_t <F(zhat_t), zhat_t - z>.
/// Uses the field values stored in the records.
double restricted_merit(std::span<const IterateRecord> records, const ReferenceRegion& region);

/// Same, re-evaluating F(zhat_t) with `field`.
double restricted_merit(const VectorField& field, std::span<const IterateRecord> records,
                        const ReferenceRegion& region);

/// Running merit after each of the first t records, every `stride` records
/// (and always at the last one). O(n) per record.
Series merit_series(std::span<const IterateRecord> records, const ReferenceRegion& region, int stride = 1);

/// max_y g(x, y) - min_x g(x, y) via the problem's closed-form best responses.
double duality_gap(const MinMaxProblem& problem, const Vector& x_bar, const Vector& y_bar);

/// |F(z)|_2.
double fnorm_residual(const VectorField& field, const Vector& z);

/// max over the region of <F(z_bar), z_bar - z>.
double strong_residual(const VectorField& field, const Vector& z_bar, const ReferenceRegion& region);

struct SumBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = true;
};

/// lhs = sum gamma_t <F(zhat_t), zhat_t - z_ref> + 1/4 sum |zhat_t - z_t|^2
///       + 1/4 sum |z_{t+1} - zhat_t|^2,
/// rhs = D(z_ref, z_1) - D(z_ref, z_{T+1}); satisfied iff
/// lhs <= rhs + 1e-6 (1 + |rhs|).
SumBoundCheck sum_bound_monitor(std::span<const IterateRecord> records, const BregmanGeometry& geometry,
                                const Vector& z1, const Vector& z_ref);

struct TrajectoryViolation {
  int t = 0;
  std::string what;
  double value = 0.0;
  double bound = 0.0;
};

struct TrajectoryReport {
  std::vector<TrajectoryViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks |F(z_t)| <= 4 sqrt(t) L1 |z1 - z*| and
/// (1/8) sum_{s<=t} |z_{s+1} - z_s|^2 <= D(z*, z1) for every t
/// (squared Euclidean geometry), each with 1e-9 slack.
TrajectoryReport trajectory_bound_monitor(std::span<const IterateRecord> records, const Vector& z1,
                                          const Vector& z_star, double L1);

struct RatePoint {
  double T = 0.0;
  double value = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<RatePoint> grid;
};

/// Least-squares line through (log T, log value).
RateFit fit_rate(std::span<const RatePoint> grid);

struct SpectrumReport {
  Matrix symmetric;
  Matrix antisymmetric;
  double min_symmetric_eigenvalue = 0.0;
  double min_real_eigenvalue = 0.0;
  /// Hypothesis lambda_min(S) >= -tol held, so Re(eig(M)) >= -1e-10 was asserted.
  bool psd_checked = false;
  bool real_parts_ok = true;
  /// Hypothesis lambda_min(S) > 0 held, so I + gamma M was tested for gamma = 10^k.
  bool pd_checked = false;
  bool resolvents_invertible = true;
  bool ok() const { return real_parts_ok && resolvents_invertible; }
};

/// Splits M = S + A and checks the eigenvalue consequences of S >= 0 / S > 0.
SpectrumReport jacobian_spectrum_check(const Matrix& m, double psd_tol = 1e-10);

struct BandReport {
  int searched = 0;
  int cap_plus = 0;
  int cap_minus = 0;
  std::vector<int> band_violations;
  std::vector<int> cap_violations;
  bool ok() const { return band_violations.empty() && cap_violations.empty(); }
};

/// Every searched record in the step-size band, and no step above the cap.
BandReport band_monitor(const SolverReport& report, double rel_tol = 1e-9);

}  // namespace homp
