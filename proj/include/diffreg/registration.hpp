#pragma once

// Pose sampling about the isocenter, multi-start initialization, and
// test-time pose optimization with Adam in a chosen parameterization.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "diffreg/geometry.hpp"
#include "diffreg/image.hpp"
#include "diffreg/lie.hpp"
#include "diffreg/similarity.hpp"
#include "diffreg/volume.hpp"

namespace diffreg {

struct SamplerConfig {
  Eigen::Vector3d sigma_rot{0.2, 0.2, 0.2};    // rad
  Eigen::Vector3d sigma_trans{60, 30, 30};     // mm; x is the depth axis at the isocenter

  void validate() const;
};

/// exp(v) * iso with v ~ N(0, diag(sigma^2)) over (omega, u).
Pose sample_pose(const Pose& iso, const SamplerConfig& cfg, std::mt19937_64& rng);

struct OptimConfig {
  ParamKind param_kind = ParamKind::se3;
  double lr_rot = 7.5e-3;
  double lr_trans = 7.5;
  int max_iters = 250;
  double decay = 0.9;
  int decay_every = 25;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool early_stop = true;
  double min_improve = 0.05;
  int patience = 20;
  int threads = 1;

  void validate() const;
};

struct AdamState {
  Eigen::VectorXd m, v;
  int steps = 0;
};

/// One Adam step minimizing along `grads`. The first rotation_dim entries use
/// lr_rot, the last three lr_trans, both scaled by decay^(iter / decay_every).
/// Quaternion parameters are renormalized afterwards. Throws InvalidArgument
/// on non-finite gradients.
void step_adam(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grads, int iter,
               const OptimConfig& cfg);

/// Counts iterations since the last one that beat the running best by at
/// least `min_improve`.
class EarlyStopper {
 public:
  EarlyStopper(double min_improve, int patience);

  /// Feeds the next score; returns true once `patience` consecutive scores
  /// failed to improve.
  bool update(double score);
  double best() const { return best_; }
  int stale() const { return stale_; }

 private:
  double min_improve_;
  int patience_;
  double best_ = 0.0;
  int stale_ = 0;
  bool started_ = false;
};

struct TrajectoryRecord {
  int iter = 0;
  Pose pose;
  double similarity = 0.0;
  double grad_norm = 0.0;
  double ms = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;

  /// iter, omega_x..u_z of log(pose), similarity, grad_norm, ms.
  void write_csv(const std::filesystem::path& path) const;
};

struct RegistrationResult {
  Pose pose;
  double similarity = 0.0;
  int best_iter = 0;
  int iterations = 0;
  std::string stop_reason;  // "max_iters" or "early_stop"
  Trajectory trajectory;
};

/// Maximizes the configured similarity between `fixed` and renders of `v`.
/// Returns the best pose seen. Throws DegenerateInput when the render at
/// `init` cannot be scored.
RegistrationResult register_pose(const Image& fixed, const Volume& v, const Detector& d,
                                 const Pose& init, const OptimConfig& ocfg,
                                 const MetricConfig& mcfg, std::mt19937_64& rng);

/// Candidate 0 is `iso`, followed by `n` draws of sample_pose.
std::vector<Pose> multistart_candidates(const Pose& iso, int n, const SamplerConfig& cfg,
                                        std::mt19937_64& rng);

/// Index of the best-scoring candidate, ties to the lowest index. Candidates
/// that cannot be scored rank last. The sparse metric scores every
/// candidate on one shared patch set.
std::size_t select_candidate(const Image& fixed, const Volume& v, const Detector& d,
                             const std::vector<Pose>& candidates, const MetricConfig& metric,
                             std::mt19937_64& rng, int threads = 1);

Pose init_multistart(const Image& fixed, const Volume& v, const Detector& d, const Pose& iso,
                     int n, const MetricConfig& metric, std::mt19937_64& rng,
                     const SamplerConfig& sampler = {}, int threads = 1);

}  // namespace diffreg
