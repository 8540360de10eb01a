#include "diffreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "diffreg/errors.hpp"

namespace diffreg {

std::string to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::cube: return "cube";
    case PhantomKind::spheres: return "spheres";
    case PhantomKind::hip: return "hip";
  }
  return "unknown";
}

PhantomKind parse_phantom_kind(const std::string& name) {
  if (name == "cube") return PhantomKind::cube;
  if (name == "spheres") return PhantomKind::spheres;
  if (name == "hip" || name == "hip-like") return PhantomKind::hip;
  throw InvalidArgument("unknown phantom kind: " + name);
}

namespace {

constexpr double kSoftTissue = 0.02;

/// Returns the attenuation at a world point, or a negative value outside
/// the structure.
using Shape = std::function<double(const Eigen::Vector3d&)>;

struct Scene {
  Shape body;
  std::vector<Shape> structures;  // later entries overwrite earlier ones
  Eigen::AlignedBox3d box;        // dense structures only
};

double eval_scene(const Scene& s, const Eigen::Vector3d& x) {
  double mu = std::max(0.0, s.body(x));
  for (const auto& f : s.structures) {
    const double v = f(x);
    if (v >= 0) mu = v;
  }
  return mu;
}

Volume voxelize(const Scene& s, const PhantomConfig& cfg) {
  Volume v(cfg.dims, cfg.spacing);
  for (int k = 0; k < cfg.dims[2]; ++k)
    for (int j = 0; j < cfg.dims[1]; ++j)
      for (int i = 0; i < cfg.dims[0]; ++i)
        v.at(i, j, k) = eval_scene(s, Eigen::Vector3d(i + 0.5, j + 0.5, k + 0.5).cwiseProduct(cfg.spacing));
  return v;
}

Shape ellipsoid(const Eigen::Vector3d& c, const Eigen::Vector3d& r, double mu) {
  return [=](const Eigen::Vector3d& x) {
    return ((x - c).cwiseQuotient(r)).squaredNorm() <= 1.0 ? mu : -1.0;
  };
}

Shape ball(const Eigen::Vector3d& c, double r, double mu) {
  return [=](const Eigen::Vector3d& x) { return (x - c).squaredNorm() <= r * r ? mu : -1.0; };
}

/// Cylinder along z between z0 and z1.
Shape rod(const Eigen::Vector2d& c, double r, double z0, double z1, double mu) {
  return [=](const Eigen::Vector3d& x) {
    return x.z() >= z0 && x.z() <= z1 && (x.head<2>() - c).squaredNorm() <= r * r ? mu : -1.0;
  };
}

/// Torus in the plane z = c.z with major radius R and tube radius r.
Shape ring(const Eigen::Vector3d& c, double R, double r, double mu) {
  return [=](const Eigen::Vector3d& x) {
    const Eigen::Vector3d d = x - c;
    const double q = std::hypot(d.x(), d.y()) - R;
    return q * q + d.z() * d.z() <= r * r ? mu : -1.0;
  };
}

Shape block(const Eigen::AlignedBox3d& b, double mu) {
  return [=](const Eigen::Vector3d& x) { return b.contains(x) ? mu : -1.0; };
}

LandmarkSet box_landmarks(const Eigen::AlignedBox3d& b) {
  LandmarkSet m;
  m.points.resize(3, 9);
  const char* names[] = {"c000", "c100", "c010", "c110", "c001", "c101", "c011", "c111"};
  for (int k = 0; k < 8; ++k) {
    for (int a = 0; a < 3; ++a) m.points(a, k) = (k >> a) & 1 ? b.max()[a] : b.min()[a];
    m.labels.emplace_back(names[k]);
  }
  m.points.col(8) = b.center();
  m.labels.emplace_back("centroid");
  return m;
}

Scene cube_scene(const Eigen::Vector3d& ext) {
  Scene s;
  s.body = [](const Eigen::Vector3d&) { return kSoftTissue; };
  s.box = Eigen::AlignedBox3d(0.25 * ext, 0.75 * ext);
  s.structures.push_back(block(s.box, 0.04));
  return s;
}

Scene spheres_scene(const Eigen::Vector3d& ext, std::uint64_t seed) {
  Scene s;
  const Eigen::Vector3d center = 0.5 * ext;
  const Eigen::Vector3d body_r = 0.45 * ext;
  s.body = block(Eigen::AlignedBox3d(center - body_r, center + body_r), kSoftTissue);
  const double scale = ext.minCoeff();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.22, 0.78), rad(0.07, 0.13), mu(0.035, 0.07);
  std::vector<std::pair<Eigen::Vector3d, double>> placed;
  constexpr int kSpheres = 5;
  for (int attempt = 0; attempt < 10000 && placed.size() < kSpheres; ++attempt) {
    const Eigen::Vector3d c(pos(rng) * ext.x(), pos(rng) * ext.y(), pos(rng) * ext.z());
    const double r = rad(rng) * scale;
    const double m = mu(rng);
    // Keep the sphere inside the body with a margin.
    if (((c - center).cwiseQuotient(body_r)).norm() + r / (0.45 * scale) > 0.95) continue;
    bool clear = true;
    for (const auto& [pc, pr] : placed)
      if ((pc - c).norm() < pr + r + 0.03 * scale) clear = false;
    if (!clear) continue;
    placed.emplace_back(c, r);
    s.structures.push_back(ball(c, r, m));
    s.box.extend(c - Eigen::Vector3d::Constant(r));
    s.box.extend(c + Eigen::Vector3d::Constant(r));
  }
  if (placed.size() < 3) throw DegenerateInput("spheres phantom: could not place 3 spheres");
  return s;
}

Scene hip_scene(const Eigen::Vector3d& ext, std::uint64_t seed) {
  Scene s;
  const Eigen::Vector3d c = 0.5 * ext;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);
  auto j = [&] { return jitter(rng) * ext.minCoeff(); };
  s.body = ellipsoid(c, Eigen::Vector3d(0.34, 0.46, 0.47).cwiseProduct(ext), kSoftTissue);
  const double L = ext.minCoeff();
  const Eigen::Vector3d ring_c(c.x() + j(), c.y() + j(), c.z() - 0.12 * ext.z());
  s.structures.push_back(ring(ring_c, 0.22 * L, 0.055 * L, 0.05));
  const Eigen::AlignedBox3d sacrum(
      Eigen::Vector3d(c.x() + 0.10 * ext.x(), c.y() - 0.07 * ext.y(), c.z() - 0.30 * ext.z()),
      Eigen::Vector3d(c.x() + 0.20 * ext.x(), c.y() + 0.05 * ext.y(), c.z() - 0.10 * ext.z()));
  s.structures.push_back(block(sacrum, 0.06));
  s.box.extend(sacrum);
  s.box.extend(ring_c - Eigen::Vector3d(0.275 * L, 0.275 * L, 0.055 * L));
  s.box.extend(ring_c + Eigen::Vector3d(0.275 * L, 0.275 * L, 0.055 * L));
  for (int side : {-1, 1}) {
    const double r = (0.075 + 0.01 * side) * L;
    const Eigen::Vector3d head(c.x() + j(), c.y() + side * 0.22 * ext.y(), c.z() + 0.05 * ext.z());
    s.structures.push_back(ball(head, r, 0.07));
    const double z1 = 0.93 * ext.z();
    s.structures.push_back(rod(head.head<2>(), 0.045 * L, head.z(), z1, 0.065));
    s.box.extend(head - Eigen::Vector3d::Constant(r));
    s.box.extend(Eigen::Vector3d(head.x() + r, head.y() + r, z1));
  }
  return s;
}

}  // namespace

Phantom make_phantom(const PhantomConfig& cfg) {
  if (cfg.dims[0] < 2 || cfg.dims[1] < 2 || cfg.dims[2] < 2)
    throw InvalidArgument("phantom dims must be >= 2");
  if (!(cfg.spacing.minCoeff() > 0)) throw InvalidArgument("phantom spacing must be positive");
  const Eigen::Vector3d ext(cfg.dims[0] * cfg.spacing.x(), cfg.dims[1] * cfg.spacing.y(),
                            cfg.dims[2] * cfg.spacing.z());
  Phantom p;
  if (cfg.kind == PhantomKind::cube) {
    // The block faces sit on voxel planes for even dims; no supersampling needed.
    const Scene s = cube_scene(ext);
    p.volume = Volume(cfg.dims, cfg.spacing);
    for (int k = 0; k < cfg.dims[2]; ++k)
      for (int j = 0; j < cfg.dims[1]; ++j)
        for (int i = 0; i < cfg.dims[0]; ++i)
          p.volume.at(i, j, k) = eval_scene(s, p.volume.voxel_center(i, j, k));
    p.landmarks = box_landmarks(s.box);
    return p;
  }
  const Scene s = cfg.kind == PhantomKind::spheres ? spheres_scene(ext, cfg.seed)
                                                   : hip_scene(ext, cfg.seed);
  p.volume = voxelize(s, cfg);
  p.landmarks = box_landmarks(s.box);
  return p;
}

Intrinsics default_intrinsics(const Volume& v, int pixels, double focal_length) {
  if (pixels < 2) throw InvalidArgument("detector needs at least 2 pixels per side");
  // Magnification at the isocenter is 2 with the source at f/2.
  const double spacing = 2.0 * 1.25 * v.extent().maxCoeff() / pixels;
  Intrinsics k;
  k.delta_x = k.delta_y = spacing;
  k.fx = k.fy = focal_length / spacing;
  k.cx = k.cy = 0.5 * pixels;
  k.height = k.width = pixels;
  return k;
}

}  // namespace diffreg
