#include "diffreg/benchmark.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "diffreg/errors.hpp"
#include "diffreg/parallel.hpp"
#include "diffreg/render.hpp"

namespace diffreg {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::mt19937_64 g(seq);
  return g();
}

Eigen::Vector3d uniform_in_ball(double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Eigen::Vector3d dir(n01(rng), n01(rng), n01(rng));
  dir.normalize();
  return dir * (radius * std::cbrt(u01(rng)));
}

double median_of(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

}  // namespace

std::vector<Trial> make_trials(const Volume& v, const Detector& d, const PlantConfig& plant, int n,
                               std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("benchmark needs at least one trial");
  const Pose iso = isocenter_pose(v);
  std::vector<Trial> trials(n);
  for (int k = 0; k < n; ++k) {
    Trial& t = trials[k];
    t.index = k;
    t.seed = derive_seed(seed, k);
    std::mt19937_64 rng(t.seed);
    t.truth = sample_pose(iso, plant.truth, rng);
    Tangent dv;
    dv.omega = uniform_in_ball(plant.max_rot, rng);
    dv.u = uniform_in_ball(plant.max_trans, rng);
    t.init = exp_se3(dv) * t.truth;
    if (plant.bone_augment) {
      t.bone_multiplier = sample_bone_multiplier(rng);
      t.fixed = render(bone_augment(v, t.bone_multiplier), t.truth, d);
    } else {
      t.fixed = render(v, t.truth, d);
    }
    if (plant.noise_sigma > 0) {
      std::normal_distribution<double> noise(0.0, plant.noise_sigma);
      for (double& p : t.fixed.pixels) p += noise(rng);
    }
  }
  return trials;
}

const SummaryRow& BenchmarkReport::row(ParamKind p, MetricKind m) const {
  for (const auto& r : summary)
    if (r.param == p && r.metric == m) return r;
  throw InvalidArgument("no summary row for " + to_string(p) + " / " + to_string(m));
}

namespace {

void write_summary(std::ostream& out, const SuccessSummary& s) {
  out << ',' << s.rate << ',' << s.median << ',' << s.mean << ',' << s.std;
}

}  // namespace

void BenchmarkReport::write_results_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  out << "trial,param,metric,init_mtre,mtre,mtre_per_landmark,similarity,iterations,stop_reason,error\n";
  for (const auto& r : results)
    out << r.trial << ',' << to_string(r.param) << ',' << to_string(r.metric) << ',' << r.init_mtre
        << ',' << r.mtre << ',' << r.mtre_mean << ',' << r.similarity << ',' << r.iterations << ','
        << r.stop_reason << ',' << r.error << '\n';
}

void BenchmarkReport::write_summary_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  out << "param,metric,n,smsr,median_mtre,mean_mtre,std_mtre,smsr_per_landmark,"
         "median_per_landmark,mean_per_landmark,std_per_landmark,capture_10mm,median_iterations,"
         "failures\n";
  for (const auto& r : summary) {
    out << to_string(r.param) << ',' << to_string(r.metric) << ',' << r.literal.n;
    write_summary(out, r.literal);
    write_summary(out, r.per_landmark);
    out << ',' << r.capture.rate << ',' << r.median_iterations << ',' << r.failures << '\n';
  }
}

nlohmann::json BenchmarkReport::summary_json() const {
  nlohmann::json rows = nlohmann::json::array();
  auto pack = [](const SuccessSummary& s) {
    return nlohmann::json{{"n", s.n},        {"threshold", s.threshold}, {"rate", s.rate},
                          {"median", s.median}, {"mean", s.mean},         {"std", s.std}};
  };
  for (const auto& r : summary)
    rows.push_back({{"param", to_string(r.param)},
                    {"metric", to_string(r.metric)},
                    {"mtre", pack(r.literal)},
                    {"mtre_per_landmark", pack(r.per_landmark)},
                    {"capture_10mm", r.capture.rate},
                    {"median_iterations", r.median_iterations},
                    {"failures", r.failures}});
  return rows;
}

BenchmarkReport run_benchmark(const Volume& v, const LandmarkSet& landmarks, const Detector& d,
                              const BenchmarkConfig& cfg) {
  if (cfg.params.empty() || cfg.metrics.empty())
    throw InvalidArgument("benchmark needs at least one param kind and one metric");
  const std::vector<Trial> trials = make_trials(v, d, cfg.plant, cfg.trials, cfg.seed);

  struct Combo {
    ParamKind param;
    MetricKind metric;
  };
  std::vector<Combo> combos;
  for (ParamKind p : cfg.params)
    for (MetricKind m : cfg.metrics) combos.push_back({p, m});

  BenchmarkReport report;
  report.results.resize(combos.size() * trials.size());
  parallel_for(static_cast<int>(report.results.size()), cfg.threads, [&](int job) {
    const Combo& c = combos[job / trials.size()];
    const Trial& t = trials[job % trials.size()];
    TrialResult& r = report.results[job];
    r.trial = t.index;
    r.param = c.param;
    r.metric = c.metric;
    r.init_mtre = pose_mtre(t.truth, t.init, landmarks);
    OptimConfig ocfg = cfg.optim;
    ocfg.param_kind = c.param;
    ocfg.threads = 1;
    MetricConfig mcfg = cfg.metric;
    mcfg.kind = c.metric;
    std::mt19937_64 rng(derive_seed(t.seed, 1));
    try {
      const RegistrationResult res = register_pose(t.fixed, v, d, t.init, ocfg, mcfg, rng);
      r.mtre = pose_mtre(t.truth, res.pose, landmarks);
      r.mtre_mean = pose_mtre(t.truth, res.pose, landmarks, MtreMode::per_landmark_mean);
      r.similarity = res.similarity;
      r.iterations = res.iterations;
      r.stop_reason = res.stop_reason;
    } catch (const std::exception& e) {
      // A failed run counts as unregistered: the error is the initial one.
      r.mtre = r.init_mtre;
      r.mtre_mean = pose_mtre(t.truth, t.init, landmarks, MtreMode::per_landmark_mean);
      r.stop_reason = "error";
      r.error = e.what();
      std::replace(r.error.begin(), r.error.end(), ',', ';');
    }
  }, 1);

  for (std::size_t ci = 0; ci < combos.size(); ++ci) {
    std::vector<double> lit, mean, iters;
    SummaryRow row;
    row.param = combos[ci].param;
    row.metric = combos[ci].metric;
    for (std::size_t k = 0; k < trials.size(); ++k) {
      const TrialResult& r = report.results[ci * trials.size() + k];
      lit.push_back(r.mtre);
      mean.push_back(r.mtre_mean);
      iters.push_back(r.iterations);
      if (!r.error.empty()) ++row.failures;
    }
    row.literal = smsr(lit, cfg.success_threshold);
    row.per_landmark = smsr(mean, cfg.success_threshold);
    row.capture = smsr(lit, 10.0);
    row.median_iterations = median_of(iters);
    report.summary.push_back(row);
  }
  return report;
}

}  // namespace diffreg
