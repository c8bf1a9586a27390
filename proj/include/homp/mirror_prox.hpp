#pragma once

#include "homp/geometry.hpp"
#include "homp/report.hpp"
#include "homp/vectorfield.hpp"

namespace homp {

struct MirrorProxConfig {
  double step_gamma = 0.0;
  int iterations = 1;
  /// Stride of the fnorm diagnostic series.
  int record_every = 1;
};

/// Mirror Prox baseline with a constant step:
///   zhat_t  = prox(z_t, gamma F(z_t)),
///   z_{t+1} = prox(z_t, gamma F(zhat_t)).
/// Output is the uniform average of the zhat_t.
SolverReport mp_run(const VectorField& field, const BregmanGeometry& geometry, const ConstraintSet& set,
                    const Vector& z1, const MirrorProxConfig& config);

}  // namespace homp
