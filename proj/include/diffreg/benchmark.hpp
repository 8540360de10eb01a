#pragma once

// Plant-and-recover benchmark: seeded trials with a known pose, a perturbed
// initialization shared by every (parameterization, metric) combination,
// and success statistics per combination.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diffreg/eval.hpp"
#include "diffreg/geometry.hpp"
#include "diffreg/registration.hpp"
#include "diffreg/volume.hpp"

namespace diffreg {

struct PlantConfig {
  /// Ground-truth poses are drawn about the isocenter with these spreads.
  SamplerConfig truth{{0.1, 0.1, 0.1}, {10, 10, 10}};
  /// Initialization is exp(v) * truth with omega and u uniform in balls of
  /// these radii.
  double max_rot = 0.05;    // rad
  double max_trans = 5.0;   // mm
  /// Fixed images come from the bone-augmented volume with c ~ U[1, 10].
  bool bone_augment = false;
  /// Additive Gaussian noise on the fixed image, absolute units.
  double noise_sigma = 0.0;
};

struct BenchmarkConfig {
  int trials = 50;
  std::uint64_t seed = 0;
  std::vector<ParamKind> params{ParamKind::se3};
  std::vector<MetricKind> metrics{MetricKind::sparse_mncc};
  OptimConfig optim;
  MetricConfig metric;  // kind is overridden per combination
  PlantConfig plant;
  int threads = 1;
  double success_threshold = 1.0;  // mm
};

struct Trial {
  int index = 0;
  Pose truth;
  Pose init;
  Image fixed;
  double bone_multiplier = 1.0;
  std::uint64_t seed = 0;
};

/// Deterministic in (volume, detector, plant, seed, n).
std::vector<Trial> make_trials(const Volume& v, const Detector& d, const PlantConfig& plant,
                               int n, std::uint64_t seed);

struct TrialResult {
  int trial = 0;
  ParamKind param = ParamKind::se3;
  MetricKind metric = MetricKind::sparse_mncc;
  double init_mtre = 0.0;
  double mtre = 0.0;       // literal
  double mtre_mean = 0.0;  // per-landmark mean
  double similarity = 0.0;
  int iterations = 0;
  std::string stop_reason;
  std::string error;  // non-empty when registration threw
};

struct SummaryRow {
  ParamKind param = ParamKind::se3;
  MetricKind metric = MetricKind::sparse_mncc;
  SuccessSummary literal;
  SuccessSummary per_landmark;
  SuccessSummary capture;  // literal mTRE below 10 mm
  double median_iterations = 0.0;
  int failures = 0;
};

struct BenchmarkReport {
  std::vector<TrialResult> results;  // combination-major, trial-minor
  std::vector<SummaryRow> summary;

  const SummaryRow& row(ParamKind p, MetricKind m) const;
  void write_results_csv(const std::filesystem::path& path) const;
  void write_summary_csv(const std::filesystem::path& path) const;
  nlohmann::json summary_json() const;
};

/// Runs every (param, metric) combination on the same trials. Combinations
/// and trials are spread over `threads` workers; each registration renders
/// single-threaded and draws from a seed derived from the trial, so the
/// report does not depend on the thread count.
BenchmarkReport run_benchmark(const Volume& v, const LandmarkSet& landmarks, const Detector& d,
                              const BenchmarkConfig& cfg);

}  // namespace diffreg
