#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "diffreg/benchmark.hpp"
#include "diffreg/gradcheck.hpp"
#include "diffreg/phantom.hpp"

using namespace diffreg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Scene {
  Phantom ph = make_phantom({PhantomKind::spheres, {32, 32, 32}, {4, 4, 4}, 5});
  Detector d = make_detector(default_intrinsics(ph.volume, 32));
};

BenchmarkConfig small_config() {
  BenchmarkConfig cfg;
  cfg.trials = 3;
  cfg.seed = 11;
  cfg.params = {ParamKind::se3, ParamKind::quaternion};
  cfg.metrics = {MetricKind::sparse_mncc, MetricKind::mse};
  cfg.optim.max_iters = 6;
  cfg.metric.n_patches = 10;
  return cfg;
}

}  // namespace

TEST_SUITE("benchmark") {

TEST_CASE("trials are deterministic and initializations shared") {
  Scene s;
  PlantConfig plant;
  const auto a = make_trials(s.ph.volume, s.d, plant, 4, 9);
  const auto b = make_trials(s.ph.volume, s.d, plant, 4, 9);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].truth.matrix() == b[i].truth.matrix());
    CHECK(a[i].init.matrix() == b[i].init.matrix());
    CHECK(a[i].fixed.pixels == b[i].fixed.pixels);
    const Tangent v = log_se3(a[i].init * inverse(a[i].truth));
    CHECK(v.omega.norm() <= plant.max_rot + 1e-12);
  }
  CHECK(make_trials(s.ph.volume, s.d, plant, 4, 10)[0].truth.matrix() != a[0].truth.matrix());
  plant.bone_augment = true;
  for (const Trial& t : make_trials(s.ph.volume, s.d, plant, 20, 9)) {
    CHECK(t.bone_multiplier >= 1.0);
    CHECK(t.bone_multiplier <= 10.0);
  }
}

TEST_CASE("benchmark report shape and thread invariance") {
  Scene s;
  BenchmarkConfig cfg = small_config();
  const BenchmarkReport one = run_benchmark(s.ph.volume, s.ph.landmarks, s.d, cfg);
  CHECK(one.summary.size() == 4);
  CHECK(one.results.size() == 12);
  CHECK(one.row(ParamKind::quaternion, MetricKind::mse).literal.n == 3);
  for (const auto& r : one.results) CHECK(r.error.empty());

  cfg.threads = 3;
  const BenchmarkReport three = run_benchmark(s.ph.volume, s.ph.landmarks, s.d, cfg);
  const fs::path dir = fs::temp_directory_path() / "diffreg_bench_test";
  fs::create_directories(dir);
  one.write_results_csv(dir / "a.csv");
  three.write_results_csv(dir / "b.csv");
  one.write_summary_csv(dir / "sa.csv");
  three.write_summary_csv(dir / "sb.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "sa.csv") == slurp(dir / "sb.csv"));
  CHECK(one.summary_json() == three.summary_json());
  fs::remove_all(dir);
  CHECK_THROWS(one.row(ParamKind::euler, MetricKind::mse));
}

TEST_CASE("gradcheck") {
  Scene s;
  GradcheckConfig cfg;
  cfg.cases = 3;
  SUBCASE("zero volume passes trivially") {
    const Volume z({16, 16, 16}, {2, 2, 2});
    const GradcheckReport r = run_gradcheck(z, make_detector(default_intrinsics(z, 16)), cfg);
    CHECK(r.ok);
    CHECK(r.tested == 0);
  }
  SUBCASE("phantom passes") {
    const GradcheckReport r = run_gradcheck(s.ph.volume, s.d, cfg);
    CHECK(r.tested > 100);
    CHECK(r.ok);
  }
  SUBCASE("a corrupted jacobian fails") {
    cfg.corrupt = 0.01;
    const GradcheckReport r = run_gradcheck(s.ph.volume, s.d, cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.fraction < 0.5);
  }
}

}
