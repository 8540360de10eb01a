#pragma once

// Finite-difference validation of render_with_jacobian.

#include <cstdint>
#include <vector>

#include "diffreg/geometry.hpp"
#include "diffreg/registration.hpp"
#include "diffreg/volume.hpp"

namespace diffreg {

struct GradcheckConfig {
  int cases = 20;
  double rot_step = 1e-4;    // rad
  double trans_step = 1e-2;  // mm
  double rel_tol = 1e-3;
  /// Pixels whose derivative norm is at or below this are not tested.
  double grad_floor = 1e-8;
  double pass_fraction = 0.95;
  std::uint64_t seed = 0;
  /// Poses are drawn about the isocenter with these spreads.
  SamplerConfig sampler{{0.1, 0.1, 0.1}, {10, 10, 10}};
  /// Test hook: scales the analytic gradients by (1 + corrupt).
  double corrupt = 0.0;
  int threads = 1;
};

struct GradcheckCase {
  int index = 0;
  Pose pose;
  int tested = 0;
  int passed = 0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  int tested = 0;
  int passed = 0;
  double fraction = 1.0;  // passed / tested, 1 when nothing was tested
  bool ok = true;
};

/// Relative error per pixel is |g_ad - g_fd| / |g_fd| over the 6-vector of
/// left-perturbation derivatives, tested where max(|g_ad|, |g_fd|) exceeds
/// grad_floor. Central differences use exp(+-h e_k) T.
GradcheckReport run_gradcheck(const Volume& v, const Detector& d, const GradcheckConfig& cfg);

}  // namespace diffreg
