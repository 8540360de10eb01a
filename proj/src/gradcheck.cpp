#include "diffreg/gradcheck.hpp"

#include <limits>
#include <random>

#include "diffreg/errors.hpp"
#include "diffreg/render.hpp"

namespace diffreg {

GradcheckReport run_gradcheck(const Volume& v, const Detector& d, const GradcheckConfig& cfg) {
  if (cfg.cases < 1) throw InvalidArgument("gradcheck needs at least one case");
  if (!(cfg.rot_step > 0) || !(cfg.trans_step > 0)) throw InvalidArgument("steps must be > 0");
  std::mt19937_64 rng(cfg.seed);
  const Pose iso = isocenter_pose(v);
  GradcheckReport report;
  for (int c = 0; c < cfg.cases; ++c) {
    GradcheckCase gc;
    gc.index = c;
    gc.pose = sample_pose(iso, cfg.sampler, rng);
    const RenderJacobian rj = render_with_jacobian(v, gc.pose, d, std::nullopt, {cfg.threads});

    PixelGradients fd(d.pixel_count(), 6);
    for (int k = 0; k < 6; ++k) {
      const double h = k < 3 ? cfg.rot_step : cfg.trans_step;
      Vector6d e = Vector6d::Zero();
      e[k] = h;
      const Image plus = render(v, exp_se3(Tangent::from_vector(e)) * gc.pose, d, std::nullopt,
                                {cfg.threads});
      const Image minus = render(v, exp_se3(Tangent::from_vector(-e)) * gc.pose, d, std::nullopt,
                                 {cfg.threads});
      for (int i = 0; i < d.pixel_count(); ++i) fd(i, k) = (plus.pixels[i] - minus.pixels[i]) / (2 * h);
    }

    for (int i = 0; i < d.pixel_count(); ++i) {
      const Vector6d ad = rj.gradients.row(i).transpose() * (1.0 + cfg.corrupt);
      const Vector6d num = fd.row(i).transpose();
      if (std::max(ad.norm(), num.norm()) <= cfg.grad_floor) continue;
      const double rel = num.norm() > 0 ? (ad - num).norm() / num.norm()
                                        : std::numeric_limits<double>::infinity();
      ++gc.tested;
      if (rel < cfg.rel_tol) ++gc.passed;
      gc.max_rel_error = std::max(gc.max_rel_error, rel);
    }
    report.tested += gc.tested;
    report.passed += gc.passed;
    report.cases.push_back(gc);
  }
  if (report.tested > 0) report.fraction = static_cast<double>(report.passed) / report.tested;
  report.ok = report.fraction >= cfg.pass_fraction;
  return report;
}

}  // namespace diffreg
