#include "diffreg/registration.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "diffreg/errors.hpp"
#include "diffreg/log.hpp"
#include "diffreg/render.hpp"

namespace diffreg {

void SamplerConfig::validate() const {
  if (!(sigma_rot.minCoeff() > 0.0) || !(sigma_trans.minCoeff() > 0.0))
    throw InvalidArgument("sampler sigmas must be positive");
}

Pose sample_pose(const Pose& iso, const SamplerConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  std::normal_distribution<double> n01(0.0, 1.0);
  Tangent v;
  for (int k = 0; k < 3; ++k) v.omega[k] = cfg.sigma_rot[k] * n01(rng);
  for (int k = 0; k < 3; ++k) v.u[k] = cfg.sigma_trans[k] * n01(rng);
  return exp_se3(v) * iso;
}

void OptimConfig::validate() const {
  if (!(lr_rot > 0.0) || !(lr_trans > 0.0)) throw InvalidArgument("learning rates must be > 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidArgument("decay must be in (0, 1]");
  if (decay_every < 1) throw InvalidArgument("decay_every must be >= 1");
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (patience < 1) throw InvalidArgument("patience must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw InvalidArgument("adam betas must be in [0, 1)");
  if (!(eps > 0.0)) throw InvalidArgument("adam eps must be > 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

void step_adam(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads, int iter,
               const OptimConfig& cfg) {
  const int n = static_cast<int>(params.size());
  if (grads.size() != n) throw InvalidArgument("step_adam: gradient size mismatch");
  if (!grads.allFinite()) throw InvalidArgument("step_adam: non-finite gradient, aborting");
  if (n != param_dim(cfg.param_kind))
    throw InvalidArgument("step_adam: parameter count does not match param kind");
  if (state.m.size() != n) {
    state.m = Eigen::VectorXd::Zero(n);
    state.v = Eigen::VectorXd::Zero(n);
    state.steps = 0;
  }
  ++state.steps;
  const double scale = std::pow(cfg.decay, iter / cfg.decay_every);
  const double c1 = 1.0 - std::pow(cfg.beta1, state.steps);
  const double c2 = 1.0 - std::pow(cfg.beta2, state.steps);
  const int rd = rotation_dim(cfg.param_kind);
  for (int k = 0; k < n; ++k) {
    const double g = grads[k];
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g * g;
    const double lr = (k < rd ? cfg.lr_rot : cfg.lr_trans) * scale;
    params[k] -= lr * (state.m[k] / c1) / (std::sqrt(state.v[k] / c2) + cfg.eps);
  }
  if (cfg.param_kind == ParamKind::quaternion) {
    const double norm = params.head<4>().norm();
    if (!(norm > 1e-12)) throw InvalidArgument("step_adam: quaternion collapsed to zero");
    params.head<4>() /= norm;
  }
}

EarlyStopper::EarlyStopper(double min_improve, int patience)
    : min_improve_(min_improve), patience_(patience) {
  if (patience < 1) throw InvalidArgument("patience must be >= 1");
}

bool EarlyStopper::update(double score) {
  if (!started_) {
    started_ = true;
    best_ = score;
    return false;
  }
  if (score - best_ >= min_improve_)
    stale_ = 0;
  else
    ++stale_;
  if (score > best_) best_ = score;
  return stale_ >= patience_;
}

void Trajectory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "iter,omega_x,omega_y,omega_z,u_x,u_y,u_z,similarity,grad_norm,ms\n";
  for (const auto& r : records) {
    const Vector6d v = log_se3(r.pose).vector();
    out << r.iter;
    for (int k = 0; k < 6; ++k) out << ',' << v[k];
    out << ',' << r.similarity << ',' << r.grad_norm << ',' << r.ms << '\n';
  }
}

namespace {

std::mt19937_64 iteration_rng(std::uint64_t run_seed, int iter) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(iter)};
  return std::mt19937_64(seq);
}

std::optional<PatchSet> patches_for(const MetricConfig& mcfg, const Detector& d,
                                    std::mt19937_64& rng) {
  if (mcfg.kind != MetricKind::sparse_mncc) return std::nullopt;
  return sample_patch_centers(d.height, d.width, mcfg.n_patches, mcfg.patch_size, rng);
}

}  // namespace

RegistrationResult register_pose(const Image& fixed, const Volume& v, const Detector& d,
                                 const Pose& init, const OptimConfig& ocfg,
                                 const MetricConfig& mcfg, std::mt19937_64& rng) {
  ocfg.validate();
  mcfg.validate();
  if (fixed.height != d.height || fixed.width != d.width)
    throw InvalidArgument("fixed image does not match detector size");
  using Clock = std::chrono::steady_clock;
  const std::uint64_t run_seed = rng();

  PoseParam param = pose_to_param(init, ocfg.param_kind);
  AdamState adam;
  EarlyStopper stopper(ocfg.min_improve, ocfg.patience);
  RegistrationResult result;
  result.similarity = -std::numeric_limits<double>::infinity();
  result.stop_reason = "max_iters";

  for (int iter = 0; iter < ocfg.max_iters; ++iter) {
    const auto t0 = Clock::now();
    const Pose pose = param_to_pose(param);
    std::mt19937_64 patch_rng = iteration_rng(run_seed, iter);
    const std::optional<PatchSet> patches = patches_for(mcfg, d, patch_rng);
    const RenderJacobian rj = render_with_jacobian(v, pose, d, patches, {ocfg.threads});

    Score score;
    try {
      score = evaluate_similarity(mcfg, fixed, rj.image, patches ? &*patches : nullptr);
    } catch (const DegenerateInput& e) {
      if (iter == 0)
        throw DegenerateInput(std::string("render at the initial pose cannot be scored (") +
                              e.what() + "); re-initialize closer to the volume");
      log_warning(std::string("iteration ") + std::to_string(iter) + ": " + e.what() +
                  "; scoring as 0");
      score.value = 0.0;
      score.d_moving.assign(fixed.size(), 0.0);
    }
    if (!std::isfinite(score.value)) throw InvalidArgument("non-finite similarity");

    Vector6d d_eps = Vector6d::Zero();
    for (std::size_t i = 0; i < score.d_moving.size(); ++i)
      if (score.d_moving[i] != 0.0) d_eps += score.d_moving[i] * rj.gradients.row(i).transpose();
    const Eigen::VectorXd d_param = param_jacobian(param).transpose() * d_eps;

    if (score.value > result.similarity) {
      result.similarity = score.value;
      result.pose = pose;
      result.best_iter = iter;
    }
    const bool stop = ocfg.early_stop && stopper.update(score.value);
    if (!stop && iter + 1 < ocfg.max_iters) {
      Eigen::VectorXd values = param.values;
      step_adam(adam, values, -d_param, iter, ocfg);
      param.values = values;
    }
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    result.trajectory.records.push_back({iter, pose, score.value, d_param.norm(), ms});
    result.iterations = iter + 1;
    if (stop) {
      result.stop_reason = "early_stop";
      break;
    }
  }
  return result;
}

std::vector<Pose> multistart_candidates(const Pose& iso, int n, const SamplerConfig& cfg,
                                        std::mt19937_64& rng) {
  if (n < 1) throw InvalidArgument("multistart needs n >= 1");
  std::vector<Pose> out{iso};
  for (int k = 0; k < n; ++k) out.push_back(sample_pose(iso, cfg, rng));
  return out;
}

std::size_t select_candidate(const Image& fixed, const Volume& v, const Detector& d,
                             const std::vector<Pose>& candidates, const MetricConfig& metric,
                             std::mt19937_64& rng, int threads) {
  if (candidates.empty()) throw InvalidArgument("no candidates");
  const std::optional<PatchSet> patches = patches_for(metric, d, rng);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const Image moving = render(v, candidates[k], d, patches, {threads});
    double s = -std::numeric_limits<double>::infinity();
    try {
      s = evaluate_similarity(metric, fixed, moving, patches ? &*patches : nullptr).value;
    } catch (const DegenerateInput&) {
    }
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  return best;
}

Pose init_multistart(const Image& fixed, const Volume& v, const Detector& d, const Pose& iso,
                     int n, const MetricConfig& metric, std::mt19937_64& rng,
                     const SamplerConfig& sampler, int threads) {
  const std::vector<Pose> candidates = multistart_candidates(iso, n, sampler, rng);
  return candidates[select_candidate(fixed, v, d, candidates, metric, rng, threads)];
}

}  // namespace diffreg
