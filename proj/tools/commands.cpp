#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "diffreg/errors.hpp"
#include "diffreg/io.hpp"
#include "diffreg/log.hpp"
#include "diffreg/render.hpp"

namespace diffreg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path prepare_out(const std::string& out, const std::string& config_echo) {
  if (out.empty()) throw InvalidArgument("--out is required");
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  std::ofstream cfg(dir / "config.toml");
  if (!cfg) throw IoError("cannot write " + (dir / "config.toml").string());
  cfg << config_echo;
  return dir;
}

std::string absolute_or_empty(const std::string& p) {
  return p.empty() ? std::string() : fs::absolute(p).string();
}

struct LoadedScene {
  Volume volume;
  Intrinsics intrinsics;
  std::optional<LandmarkSet> landmarks;
};

LoadedScene load_scene(const VolumeArgs& a) {
  LoadedScene s;
  if (a.volume.empty()) {
    PhantomConfig pc;
    pc.kind = parse_phantom_kind(a.kind);
    pc.dims = a.dims;
    pc.spacing = {a.spacing[0], a.spacing[1], a.spacing[2]};
    pc.seed = a.phantom_seed;
    Phantom p = make_phantom(pc);
    s.volume = std::move(p.volume);
    s.landmarks = std::move(p.landmarks);
  } else {
    s.volume = load_volume(a.volume);
  }
  if (!a.landmarks.empty()) s.landmarks = read_landmarks(a.landmarks);
  s.intrinsics = a.intrinsics.empty() ? default_intrinsics(s.volume, a.pixels, a.focal)
                                      : read_intrinsics(a.intrinsics);
  return s;
}

Intrinsics intrinsics_or_default(const std::string& path, const Volume& v) {
  return path.empty() ? default_intrinsics(v) : read_intrinsics(path);
}

}  // namespace

OptimConfig OptimArgs::optim() const {
  OptimConfig o;
  o.param_kind = parse_param_kind(param);
  o.lr_rot = lr_rot;
  o.lr_trans = lr_trans;
  o.max_iters = iters;
  o.early_stop = !no_early_stop;
  o.min_improve = min_improve;
  o.patience = patience;
  o.validate();
  return o;
}

MetricConfig OptimArgs::metric_config() const {
  MetricConfig m;
  m.kind = parse_metric_kind(metric);
  m.patch_size = patch_size;
  m.scales = {patch_size, kFullImage};
  m.n_patches = patches;
  m.validate();
  return m;
}

int run_phantom(const PhantomCmd& c, const std::string& config_echo) {
  const fs::path dir = prepare_out(c.out, config_echo);
  VolumeArgs a = c.vol;
  a.volume.clear();
  const LoadedScene s = load_scene(a);
  save_volume(s.volume, dir / "volume.raw", dir / "volume.json");
  write_landmarks(*s.landmarks, dir / "landmarks.csv");
  write_intrinsics(s.intrinsics, dir / "intrinsics.json");
  std::cout << "wrote " << to_string(parse_phantom_kind(a.kind)) << " phantom " << a.dims[0] << 'x'
            << a.dims[1] << 'x' << a.dims[2] << " to " << dir.string() << '\n';
  return kOk;
}

int run_render(const RenderCmd& c, const std::string& config_echo) {
  if (c.volume.empty()) throw InvalidArgument("--volume is required");
  const fs::path dir = prepare_out(c.out, config_echo);
  const Volume v = load_volume(c.volume);
  const Intrinsics k = intrinsics_or_default(c.intrinsics, v);
  const Detector d = make_detector(k);
  const Pose pose = c.pose.empty() ? isocenter_pose(v) : read_pose(c.pose);
  std::optional<PatchSet> patches;
  if (c.sparse > 0) {
    std::mt19937_64 rng(c.seed);
    patches = sample_patch_centers(d.height, d.width, c.sparse, c.patch_size, rng);
  }
  const Image img = render(v, pose, d, patches, {c.threads});
  save_image(img, dir / "image");
  write_pgm(img, dir / "image.pgm");
  write_pose(pose, dir / "pose.json");
  std::cout << "rendered " << d.height << 'x' << d.width;
  if (patches)
    std::cout << ", " << std::count(img.mask.begin(), img.mask.end(), 1) << " pixels traced";
  std::cout << '\n';
  return kOk;
}

int run_simulate(const SimulateCmd& c, const std::string& config_echo) {
  if (c.volume.empty()) throw InvalidArgument("--volume is required");
  if (c.n < 1) throw InvalidArgument("--n must be >= 1");
  if (!(c.noise >= 0)) throw InvalidArgument("--noise must be >= 0");
  const fs::path dir = prepare_out(c.out, config_echo);
  const Volume v = load_volume(c.volume);
  std::string intrinsics_path = absolute_or_empty(c.intrinsics);
  const Intrinsics k = intrinsics_or_default(c.intrinsics, v);
  if (intrinsics_path.empty()) {
    write_intrinsics(k, dir / "intrinsics.json");
    intrinsics_path = fs::absolute(dir / "intrinsics.json").string();
  }
  const Detector d = make_detector(k);
  SamplerConfig sampler;
  sampler.sigma_rot = {c.sigma_rot[0], c.sigma_rot[1], c.sigma_rot[2]};
  sampler.sigma_trans = {c.sigma_trans[0], c.sigma_trans[1], c.sigma_trans[2]};
  const Pose iso = isocenter_pose(v);
  std::mt19937_64 rng(c.seed);

  json manifest;
  manifest["volume"] = absolute_or_empty(c.volume);
  manifest["intrinsics"] = intrinsics_path;
  manifest["landmarks"] = absolute_or_empty(c.landmarks);
  manifest["cases"] = json::array();
  for (int i = 0; i < c.n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "case_%03d", i);
    const fs::path cdir = dir / name;
    fs::create_directories(cdir);
    const Pose truth = sample_pose(iso, sampler, rng);
    const double bone = c.random_bone ? sample_bone_multiplier(rng) : c.bone_multiplier;
    Image fixed = bone == 1.0 ? render(v, truth, d, std::nullopt, {c.threads})
                              : render(bone_augment(v, bone), truth, d, std::nullopt, {c.threads});
    if (c.noise > 0) {
      std::normal_distribution<double> n(0.0, c.noise);
      for (double& p : fixed.pixels) p += n(rng);
    }
    write_pose(truth, cdir / "truth.json");
    save_image(fixed, cdir / "fixed");
    write_pgm(fixed, cdir / "fixed.pgm");
    json cj = {{"volume", manifest["volume"]},
               {"intrinsics", intrinsics_path},
               {"landmarks", manifest["landmarks"]},
               {"fixed", "fixed.json"},
               {"truth", "truth.json"},
               {"bone_multiplier", bone},
               {"noise", c.noise}};
    write_json_file(cj, cdir / "case.json");
    manifest["cases"].push_back({{"dir", name}, {"bone_multiplier", bone}, {"noise", c.noise}});
  }
  write_json_file(manifest, dir / "manifest.json");
  std::cout << "simulated " << c.n << " cases in " << dir.string() << '\n';
  return kOk;
}

int run_register(const RegisterCmd& cin, const std::string& config_echo) {
  RegisterCmd c = cin;
  if (!c.case_dir.empty()) {
    const fs::path cdir(c.case_dir);
    const json cj = read_json_file(cdir / "case.json");
    auto fill = [&](std::string& field, const char* key, bool relative) {
      if (!field.empty() || !cj.contains(key)) return;
      const std::string v = cj[key].get<std::string>();
      if (v.empty()) return;
      field = relative ? (cdir / v).string() : v;
    };
    fill(c.volume, "volume", false);
    fill(c.intrinsics, "intrinsics", false);
    fill(c.landmarks, "landmarks", false);
    fill(c.fixed, "fixed", true);
    fill(c.truth, "truth", true);
  }
  if (c.volume.empty() || c.fixed.empty())
    throw InvalidArgument("need --case or both --volume and --fixed");
  const fs::path dir = prepare_out(c.out, config_echo);
  const Volume v = load_volume(c.volume);
  const Detector d = make_detector(intrinsics_or_default(c.intrinsics, v));
  const Image fixed = load_image(c.fixed);
  std::optional<Pose> truth;
  if (!c.truth.empty()) truth = read_pose(c.truth);
  std::optional<LandmarkSet> landmarks;
  if (!c.landmarks.empty()) landmarks = read_landmarks(c.landmarks);

  const OptimConfig ocfg = [&] {
    OptimConfig o = c.opt.optim();
    o.threads = c.threads;
    return o;
  }();
  const MetricConfig mcfg = c.opt.metric_config();
  std::mt19937_64 rng(c.seed);

  Pose init;
  if (c.init == "iso") {
    init = isocenter_pose(v);
  } else if (c.init == "truth") {
    if (!truth) throw InvalidArgument("--init truth needs a ground-truth pose");
    init = *truth;
  } else {
    init = read_pose(c.init);
  }
  if (c.multistart > 0)
    init = init_multistart(fixed, v, d, init, c.multistart, mcfg, rng, {}, c.threads);

  const auto t0 = std::chrono::steady_clock::now();
  RegistrationResult res;
  try {
    res = register_pose(fixed, v, d, init, ocfg, mcfg, rng);
  } catch (const DegenerateInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDegenerate;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json out;
  out["pose"] = pose_to_json(res.pose);
  out["init"] = pose_to_json(init);
  out["similarity"] = res.similarity;
  out["iterations"] = res.iterations;
  out["best_iter"] = res.best_iter;
  out["stop_reason"] = res.stop_reason;
  out["wall_time_s"] = wall;
  if (truth && landmarks) {
    out["mtre"] = pose_mtre(*truth, res.pose, *landmarks);
    out["mtre_per_landmark"] = pose_mtre(*truth, res.pose, *landmarks, MtreMode::per_landmark_mean);
    out["init_mtre"] = pose_mtre(*truth, init, *landmarks);
  } else {
    log_warning(truth ? "no landmarks given; mTRE omitted" : "no ground-truth pose; mTRE omitted");
  }
  write_json_file(out, dir / "result.json");
  write_pose(res.pose, dir / "pose.json");
  res.trajectory.write_csv(dir / "trajectory.csv");
  std::cout << "similarity " << res.similarity << " after " << res.iterations << " iterations ("
            << res.stop_reason << ")";
  if (out.contains("mtre")) std::cout << ", mTRE " << out["mtre"].get<double>() << " mm";
  std::cout << '\n';
  return kOk;
}

int run_benchmark_cmd(const BenchmarkCmd& c, const std::string& config_echo) {
  const fs::path dir = prepare_out(c.out, config_echo);
  const LoadedScene s = load_scene(c.vol);
  if (!s.landmarks) throw InvalidArgument("benchmark needs landmarks (--landmarks)");
  BenchmarkConfig cfg;
  cfg.trials = c.trials;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.params.clear();
  for (const auto& p : c.params) cfg.params.push_back(parse_param_kind(p));
  cfg.metrics.clear();
  for (const auto& m : c.metrics) cfg.metrics.push_back(parse_metric_kind(m));
  cfg.optim = c.opt.optim();
  cfg.metric = c.opt.metric_config();
  cfg.plant.max_rot = c.max_rot;
  cfg.plant.max_trans = c.max_trans;
  cfg.plant.bone_augment = c.bone;
  cfg.plant.noise_sigma = c.noise;
  const BenchmarkReport report = run_benchmark(s.volume, *s.landmarks, make_detector(s.intrinsics), cfg);
  report.write_results_csv(dir / "results.csv");
  report.write_summary_csv(dir / "summary.csv");
  write_json_file(report.summary_json(), dir / "summary.json");
  for (const auto& r : report.summary)
    std::printf("%-11s %-12s SMSR %5.1f%%  median %.3f mm  mean %.3f +- %.3f mm\n",
                to_string(r.param).c_str(), to_string(r.metric).c_str(), 100 * r.literal.rate,
                r.literal.median, r.literal.mean, r.literal.std);
  return kOk;
}

int run_gradcheck_cmd(const GradcheckCmd& c, const std::string& config_echo) {
  const LoadedScene s = load_scene(c.vol);
  GradcheckConfig cfg;
  cfg.cases = c.cases;
  cfg.rel_tol = c.tol;
  cfg.pass_fraction = c.pass_fraction;
  cfg.corrupt = c.corrupt;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  const GradcheckReport r = run_gradcheck(s.volume, make_detector(s.intrinsics), cfg);
  if (!c.out.empty()) {
    const fs::path dir = prepare_out(c.out, config_echo);
    json j;
    j["tested"] = r.tested;
    j["passed"] = r.passed;
    j["fraction"] = r.fraction;
    j["ok"] = r.ok;
    j["cases"] = json::array();
    for (const auto& gc : r.cases)
      j["cases"].push_back({{"index", gc.index}, {"tested", gc.tested}, {"passed", gc.passed},
                            {"max_rel_error", gc.max_rel_error}, {"pose", pose_to_json(gc.pose)}});
    write_json_file(j, dir / "gradcheck.json");
  }
  std::printf("%s: %d/%d pixels within rel. %.1e (%.2f%%, need %.2f%%)\n", r.ok ? "PASS" : "FAIL",
              r.passed, r.tested, c.tol, 100 * r.fraction, 100 * c.pass_fraction);
  return r.ok ? kOk : kCheckFailed;
}

}  // namespace diffreg::cli
