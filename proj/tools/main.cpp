#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "diffreg/errors.hpp"

using namespace diffreg::cli;

namespace {

void add_volume_args(CLI::App* app, VolumeArgs& a, bool allow_file) {
  if (allow_file) {
    app->add_option("--volume", a.volume, "volume metadata JSON (default: generate a phantom)");
    app->add_option("--intrinsics", a.intrinsics, "intrinsics JSON");
    app->add_option("--landmarks", a.landmarks, "landmark CSV");
  }
  app->add_option("--kind", a.kind, "phantom kind: cube, spheres, hip")->capture_default_str();
  app->add_option("--dims", a.dims, "voxel counts x y z")->capture_default_str();
  app->add_option("--spacing", a.spacing, "voxel spacing in mm")->capture_default_str();
  app->add_option("--pixels", a.pixels, "detector side in pixels")->capture_default_str();
  app->add_option("--focal", a.focal, "source-to-detector distance in mm")->capture_default_str();
  app->add_option("--phantom-seed", a.phantom_seed)->capture_default_str();
}

void add_optim_args(CLI::App* app, OptimArgs& o) {
  app->add_option("--param", o.param, "se3, axis_angle, euler, quaternion, rotation6d")
      ->capture_default_str();
  app->add_option("--metric", o.metric, "sparse_mncc, mncc, local_ncc, global_ncc, mse, mae")
      ->capture_default_str();
  app->add_option("--lr-rot", o.lr_rot)->capture_default_str();
  app->add_option("--lr-trans", o.lr_trans)->capture_default_str();
  app->add_option("--iters", o.iters)->capture_default_str();
  app->add_option("--patches", o.patches)->capture_default_str();
  app->add_option("--patch-size", o.patch_size)->capture_default_str();
  app->add_flag("--no-early-stop", o.no_early_stop);
  app->add_option("--min-improve", o.min_improve)->capture_default_str();
  app->add_option("--patience", o.patience)->capture_default_str();
}

// Unparsed defaults of list options come back as a quoted string.
std::string fix_list_value(const std::string& v) {
  if (v.size() < 4 || v.front() != '"' || v[1] != '[' || v[v.size() - 2] != ']') return v;
  std::istringstream items(v.substr(2, v.size() - 4));
  std::string out = "[", item;
  while (std::getline(items, item, ',')) {
    if (out.size() > 1) out += ", ";
    char* end = nullptr;
    std::strtod(item.c_str(), &end);
    out += (!item.empty() && *end == '\0') ? item : '"' + item + '"';
  }
  return out + "]";
}

// Only the section of the subcommand that ran, in a form --config reads back.
std::string resolved_config(const CLI::App& app, const CLI::App& sub) {
  std::istringstream all(app.config_to_str(true, false));
  std::ostringstream out;
  out << "[" << sub.get_name() << "]\n";
  const std::string prefix = sub.get_name() + ".";
  for (std::string line; std::getline(all, line);)
    if (line.rfind(prefix, 0) == 0) {
      const auto eq = line.find('=');
      out << line.substr(prefix.size(), eq - prefix.size()) << '='
          << fix_list_value(line.substr(eq + 1)) << '\n';
    }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable 2D/3D X-ray to CT registration"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; explicit flags take precedence");

  PhantomCmd phantom;
  auto* sp = app.add_subcommand("phantom", "generate a synthetic volume with landmarks");
  add_volume_args(sp, phantom.vol, false);
  sp->add_option("--out", phantom.out)->required();

  RenderCmd render;
  auto* sr = app.add_subcommand("render", "render a DRR");
  sr->add_option("--volume", render.volume)->required();
  sr->add_option("--intrinsics", render.intrinsics);
  sr->add_option("--pose", render.pose, "pose file (default: isocenter)");
  sr->add_option("--sparse", render.sparse, "trace only this many random patches")
      ->capture_default_str();
  sr->add_option("--patch-size", render.patch_size)->capture_default_str();
  sr->add_option("--seed", render.seed)->capture_default_str();
  sr->add_option("--threads", render.threads)->capture_default_str();
  sr->add_option("--out", render.out)->required();

  SimulateCmd sim;
  auto* ss = app.add_subcommand("simulate", "sample poses and render fixed images");
  ss->add_option("--volume", sim.volume)->required();
  ss->add_option("--intrinsics", sim.intrinsics);
  ss->add_option("--landmarks", sim.landmarks);
  ss->add_option("--n", sim.n, "number of cases")->capture_default_str();
  ss->add_option("--sigma-rot", sim.sigma_rot)->capture_default_str();
  ss->add_option("--sigma-trans", sim.sigma_trans)->capture_default_str();
  ss->add_option("--bone-multiplier", sim.bone_multiplier)->capture_default_str();
  ss->add_flag("--random-bone", sim.random_bone, "draw the bone multiplier from U[1, 10]");
  ss->add_option("--noise", sim.noise, "additive Gaussian noise sigma")->capture_default_str();
  ss->add_option("--seed", sim.seed)->capture_default_str();
  ss->add_option("--threads", sim.threads)->capture_default_str();
  ss->add_option("--out", sim.out)->required();

  RegisterCmd reg;
  auto* sg = app.add_subcommand("register", "register a fixed image to a volume");
  sg->add_option("--case", reg.case_dir, "simulated case directory");
  sg->add_option("--fixed", reg.fixed);
  sg->add_option("--volume", reg.volume);
  sg->add_option("--intrinsics", reg.intrinsics);
  sg->add_option("--landmarks", reg.landmarks);
  sg->add_option("--truth", reg.truth);
  sg->add_option("--init", reg.init, "iso, truth, or a pose file")->capture_default_str();
  sg->add_option("--multistart", reg.multistart, "extra random candidates for the initial pose")
      ->capture_default_str();
  add_optim_args(sg, reg.opt);
  sg->add_option("--seed", reg.seed)->capture_default_str();
  sg->add_option("--threads", reg.threads)->capture_default_str();
  sg->add_option("--out", reg.out)->required();

  BenchmarkCmd bench;
  auto* sb = app.add_subcommand("benchmark", "plant-and-recover trials");
  add_volume_args(sb, bench.vol, true);
  sb->add_option("--trials", bench.trials)->capture_default_str();
  sb->add_option("--params", bench.params)->delimiter(',')->capture_default_str();
  sb->add_option("--metrics", bench.metrics)->delimiter(',')->capture_default_str();
  sb->add_option("--max-rot", bench.max_rot, "initial rotation error bound, rad")
      ->capture_default_str();
  sb->add_option("--max-trans", bench.max_trans, "initial translation error bound, mm")
      ->capture_default_str();
  sb->add_flag("--bone", bench.bone, "bone-augment fixed images");
  sb->add_option("--noise", bench.noise)->capture_default_str();
  add_optim_args(sb, bench.opt);
  sb->add_option("--seed", bench.seed)->capture_default_str();
  sb->add_option("--threads", bench.threads)->capture_default_str();
  sb->add_option("--out", bench.out)->required();

  GradcheckCmd gc;
  auto* sc = app.add_subcommand("gradcheck", "compare pose Jacobians with finite differences");
  add_volume_args(sc, gc.vol, true);
  sc->add_option("--cases", gc.cases)->capture_default_str();
  sc->add_option("--tol", gc.tol)->capture_default_str();
  sc->add_option("--pass-fraction", gc.pass_fraction)->capture_default_str();
  sc->add_option("--corrupt", gc.corrupt, "scale the Jacobian by 1 + x (negative control)")
      ->capture_default_str();
  sc->add_option("--seed", gc.seed)->capture_default_str();
  sc->add_option("--threads", gc.threads)->capture_default_str();
  sc->add_option("--out", gc.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kCheckFailed;
  }

  try {
    if (*sp) return run_phantom(phantom, resolved_config(app, *sp));
    if (*sr) return run_render(render, resolved_config(app, *sr));
    if (*ss) return run_simulate(sim, resolved_config(app, *ss));
    if (*sg) return run_register(reg, resolved_config(app, *sg));
    if (*sb) return run_benchmark_cmd(bench, resolved_config(app, *sb));
    if (*sc) return run_gradcheck_cmd(gc, resolved_config(app, *sc));
  } catch (const diffreg::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const diffreg::DegenerateInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kOk;
}
