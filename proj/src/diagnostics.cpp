#include "homp/diagnostics.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "homp/higher_order.hpp"
#include "homp/linalg.hpp"
#include "homp/problems.hpp"

namespace homp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Gamma, w = (1/Gamma) sum gamma F(zhat), c = (1/Gamma) sum gamma <F(zhat), zhat>.
struct MeritSums {
  double gamma = 0.0;
  Vector weighted_field;
  double weighted_inner = 0.0;

  void add(double g, const Vector& f, const Vector& zhat) {
    if (weighted_field.size() == 0) weighted_field = Vector::Zero(f.size());
    gamma += g;
    weighted_field += g * f;
    weighted_inner += g * f.dot(zhat);
  }

  double merit(const ReferenceRegion& region) const {
    const Vector w = weighted_field / gamma;
    return weighted_inner / gamma + region.support(-w);
  }
};

}  // namespace

ReferenceRegion ReferenceRegion::ball(Vector center, double radius) {
  if (!(radius > 0.0)) throw ConfigurationError("ReferenceRegion: ball radius must be > 0");
  return ReferenceRegion(Ball{std::move(center), radius});
}

ReferenceRegion ReferenceRegion::constraint_set(ConstraintSet set) { return ReferenceRegion(std::move(set)); }

ReferenceRegion ReferenceRegion::sample_cloud(std::vector<Vector> points) {
  if (points.empty()) throw UsageError("ReferenceRegion: empty sample cloud");
  return ReferenceRegion(std::move(points));
}

double reference_radius(const Vector& z1, const std::optional<Vector>& z_star) {
  if (z_star) {
    const double d = (z1 - *z_star).norm();
    if (d > 0.0) return 2.0 * d;
  }
  return 2.0 * z1.norm() + 1.0;
}

ReferenceRegion ReferenceRegion::default_for(const Vector& z1, const std::optional<Vector>& z_star) {
  return ball(z1, reference_radius(z1, z_star));
}

double ReferenceRegion::support(const Vector& direction) const {
  return std::visit(Overloaded{
                        [&](const Ball& b) {
                          if (direction.size() != b.center.size())
                            throw ConfigurationError("ReferenceRegion: dimension mismatch");
                          return direction.dot(b.center) + b.radius * direction.norm();
                        },
                        [&](const ConstraintSet& s) { return s.support(direction); },
                        [&](const std::vector<Vector>& cloud) {
                          double best = -kInf;
                          for (const Vector& z : cloud) best = std::max(best, direction.dot(z));
                          return best;
                        },
                    },
                    kind_);
}

std::string ReferenceRegion::describe() const {
  return std::visit(Overloaded{
                        [](const Ball& b) { return fmt::format("ball(radius={:.6g})", b.radius); },
                        [](const ConstraintSet& s) { return fmt::format("set({})", s.describe()); },
                        [](const std::vector<Vector>& c) { return fmt::format("cloud({} points)", c.size()); },
                    },
                    kind_);
}

double restricted_merit(std::span<const IterateRecord> records, const ReferenceRegion& region) {
  if (records.empty()) throw UsageError("restricted_merit: empty record list");
  MeritSums sums;
  for (const IterateRecord& r : records) sums.add(r.gamma, r.field_at_zhat, r.zhat);
  return sums.merit(region);
}

double restricted_merit(const VectorField& field, std::span<const IterateRecord> records,
                        const ReferenceRegion& region) {
  if (records.empty()) throw UsageError("restricted_merit: empty record list");
  MeritSums sums;
  for (const IterateRecord& r : records) sums.add(r.gamma, field.eval(r.zhat), r.zhat);
  return sums.merit(region);
}

Series merit_series(std::span<const IterateRecord> records, const ReferenceRegion& region, int stride) {
  if (stride < 1) throw UsageError("merit_series: stride must be >= 1");
  Series out;
  MeritSums sums;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const IterateRecord& r = records[k];
    sums.add(r.gamma, r.field_at_zhat, r.zhat);
    if (k % static_cast<std::size_t>(stride) == 0 || k + 1 == records.size()) {
      out.emplace_back(r.t, sums.merit(region));
    }
  }
  return out;
}

double duality_gap(const MinMaxProblem& problem, const Vector& x_bar, const Vector& y_bar) {
  if (!problem.best_response_x || !problem.best_response_y) {
    throw UnsupportedOrderError(fmt::format("duality_gap: problem '{}' has no closed-form best responses", problem.name));
  }
  const Vector y_hat = problem.best_response_y(x_bar);
  const Vector x_hat = problem.best_response_x(y_bar);
  const double gap = problem.objective(x_bar, y_hat) - problem.objective(x_hat, y_bar);
  return std::max(gap, 0.0);
}

double fnorm_residual(const VectorField& field, const Vector& z) { return field.eval(z).norm(); }

double strong_residual(const VectorField& field, const Vector& z_bar, const ReferenceRegion& region) {
  const Vector f = field.eval(z_bar);
  return f.dot(z_bar) + region.support(-f);
}

SumBoundCheck sum_bound_monitor(std::span<const IterateRecord> records, const BregmanGeometry& geometry,
                                const Vector& z1, const Vector& z_ref) {
  SumBoundCheck check;
  if (records.empty()) return check;
  double lhs = 0.0;
  for (const IterateRecord& r : records) {
    lhs += r.gamma * r.field_at_zhat.dot(r.zhat - z_ref);
    lhs += 0.25 * (r.zhat - r.z).squaredNorm();
    lhs += 0.25 * (r.z_next - r.zhat).squaredNorm();
  }
  check.lhs = lhs;
  check.rhs = geometry.divergence(z_ref, z1) - geometry.divergence(z_ref, records.back().z_next);
  check.satisfied = check.lhs <= check.rhs + 1e-6 * (1.0 + std::abs(check.rhs));
  return check;
}

TrajectoryReport trajectory_bound_monitor(std::span<const IterateRecord> records, const Vector& z1,
                                          const Vector& z_star, double L1) {
  TrajectoryReport report;
  const double dist = (z1 - z_star).norm();
  const double d_star = 0.5 * dist * dist;
  double step_sum = 0.0;
  for (const IterateRecord& r : records) {
    const double fbound = 4.0 * std::sqrt(static_cast<double>(r.t)) * L1 * dist;
    if (!(r.fnorm <= fbound + 1e-9)) report.violations.push_back({r.t, "field_norm", r.fnorm, fbound});
    step_sum += (r.z_next - r.z).squaredNorm();
    if (!(step_sum / 8.0 <= d_star + 1e-9)) {
      report.violations.push_back({r.t, "step_sum", step_sum / 8.0, d_star});
    }
  }
  return report;
}

RateFit fit_rate(std::span<const RatePoint> grid) {
  if (grid.size() < 3) throw UsageError("fit_rate: need at least 3 grid points");
  const std::size_t n = grid.size();
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(grid[k].value > 0.0)) {
      throw DomainError(fmt::format("fit_rate: value at T={} must be > 0, got {}", grid[k].T, grid[k].value));
    }
    if (!(grid[k].T > 0.0)) throw DomainError("fit_rate: T must be > 0");
    if (k > 0 && !(grid[k].T > grid[k - 1].T)) throw DomainError("fit_rate: T must be strictly increasing");
    xs[k] = std::log(grid[k].T);
    ys[k] = std::log(grid[k].value);
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.grid.assign(grid.begin(), grid.end());
  return fit;
}

SpectrumReport jacobian_spectrum_check(const Matrix& m, double psd_tol) {
  if (m.rows() != m.cols()) throw ConfigurationError("jacobian_spectrum_check: matrix must be square");
  if (!m.allFinite()) throw DomainError("jacobian_spectrum_check: non-finite matrix");
  SpectrumReport report;
  report.symmetric = 0.5 * (m + m.transpose());
  report.antisymmetric = 0.5 * (m - m.transpose());
  report.min_symmetric_eigenvalue = linalg::min_symmetric_eigenvalue(report.symmetric);
  report.min_real_eigenvalue = linalg::eigenvalues(m).real().minCoeff();

  if (report.min_symmetric_eigenvalue >= -psd_tol) {
    report.psd_checked = true;
    // Eigenvalue perturbation of a defective block scales like sqrt(eps |M|).
    const double slack = std::max(1e-10, 1e-7 * (1.0 + linalg::operator_norm(m)));
    report.real_parts_ok = report.min_real_eigenvalue >= -slack;
  }
  if (report.min_symmetric_eigenvalue > psd_tol) {
    report.pd_checked = true;
    const int n = static_cast<int>(m.rows());
    for (int k = -6; k <= 6; ++k) {
      const double gamma = std::pow(10.0, k);
      const Matrix resolvent = Matrix::Identity(n, n) + gamma * m;
      if (!(linalg::sigma_min(resolvent) > 0.0) || linalg::reciprocal_condition(resolvent) * linalg::kMaxCondition < 1.0) {
        report.resolvents_invertible = false;
      }
    }
  }
  return report;
}

BandReport band_monitor(const SolverReport& report, double rel_tol) {
  BandReport out;
  for (const IterateRecord& r : report.records) {
    switch (r.branch) {
      case Branch::kSearched:
        ++out.searched;
        if (!in_band(r.gamma, r.step_norm, report.order, report.band_scale, rel_tol)) out.band_violations.push_back(r.t);
        break;
      case Branch::kCapPlus:
        ++out.cap_plus;
        break;
      case Branch::kCapMinus:
        ++out.cap_minus;
        break;
      case Branch::kFixed:
        break;
    }
    if (report.gamma_cap > 0.0 && r.branch != Branch::kCapMinus && r.gamma > report.gamma_cap * (1.0 + rel_tol)) {
      out.cap_violations.push_back(r.t);
    }
  }
  return out;
}

}  // namespace homp
