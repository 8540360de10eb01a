#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "diffreg/benchmark.hpp"
#include "diffreg/gradcheck.hpp"
#include "diffreg/phantom.hpp"
#include "diffreg/registration.hpp"

namespace diffreg::cli {

enum ExitCode { kOk = 0, kCheckFailed = 1, kDegenerate = 2, kIoError = 3 };

/// Volume source shared by commands that can fall back to a generated phantom.
struct VolumeArgs {
  std::string volume;      // metadata JSON; empty means generate
  std::string intrinsics;  // empty means default_intrinsics
  std::string landmarks;
  std::string kind = "spheres";
  std::array<int, 3> dims{64, 64, 64};
  std::array<double, 3> spacing{2.0, 2.0, 2.0};
  int pixels = 128;
  double focal = 1000.0;
  std::uint64_t phantom_seed = 0;
};

struct OptimArgs {
  std::string param = "se3";
  std::string metric = "sparse_mncc";
  double lr_rot = 7.5e-3;
  double lr_trans = 7.5;
  int iters = 250;
  int patches = 100;
  int patch_size = 13;
  bool no_early_stop = false;
  double min_improve = 0.05;
  int patience = 20;

  OptimConfig optim() const;
  MetricConfig metric_config() const;
};

struct PhantomCmd {
  VolumeArgs vol;
  std::string out;
};

struct RenderCmd {
  std::string volume, intrinsics, pose, out;
  int sparse = 0;
  int patch_size = 13;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct SimulateCmd {
  std::string volume, intrinsics, landmarks, out;
  int n = 5;
  std::array<double, 3> sigma_rot{0.2, 0.2, 0.2};
  std::array<double, 3> sigma_trans{60, 30, 30};
  double bone_multiplier = 1.0;
  bool random_bone = false;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct RegisterCmd {
  std::string case_dir, fixed, volume, intrinsics, landmarks, truth, out;
  std::string init = "iso";  // iso | truth | <pose file>
  int multistart = 0;
  OptimArgs opt;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BenchmarkCmd {
  VolumeArgs vol;
  int trials = 50;
  std::vector<std::string> params{"se3"};
  std::vector<std::string> metrics{"sparse_mncc"};
  double max_rot = 0.05;
  double max_trans = 5.0;
  bool bone = false;
  double noise = 0.0;
  OptimArgs opt;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

struct GradcheckCmd {
  VolumeArgs vol;
  int cases = 20;
  double tol = 1e-3;
  double pass_fraction = 0.95;
  double corrupt = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

int run_phantom(const PhantomCmd& c, const std::string& config_echo);
int run_render(const RenderCmd& c, const std::string& config_echo);
int run_simulate(const SimulateCmd& c, const std::string& config_echo);
int run_register(const RegisterCmd& c, const std::string& config_echo);
int run_benchmark_cmd(const BenchmarkCmd& c, const std::string& config_echo);
int run_gradcheck_cmd(const GradcheckCmd& c, const std::string& config_echo);

}  // namespace diffreg::cli
