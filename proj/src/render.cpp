#include "diffreg/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "diffreg/errors.hpp"
#include "diffreg/parallel.hpp"

namespace diffreg {

std::vector<std::uint8_t> patch_mask(const PatchSet& patches, int height, int width) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(height) * width, 0);
  const int h = patches.half();
  for (const auto& [r, c] : patches.centers) {
    const int r0 = std::max(0, r - h), r1 = std::min(height - 1, r + h);
    const int c0 = std::max(0, c - h), c1 = std::min(width - 1, c + h);
    for (int i = r0; i <= r1; ++i)
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(i) * width + c0, c1 - c0 + 1, 1);
  }
  return mask;
}

template <class T>
T siddon_raycast_t(const Volume& v, const Vec3<T>& s, const Vec3<T>& p) {
  const Vec3<T> d = p - s;
  const T len2 = d.dot(d);
  if (!(value_of(len2) > 0.0)) throw InvalidArgument("siddon_raycast: degenerate ray (s == p)");

  // Clip the parametric ray to the volume's bounding box.
  T a_min(0.0), a_max(1.0);
  std::array<double, 3> lo{}, dir{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = v.origin[a];
    const double hi = lo[a] + v.dims[a] * v.spacing[a];
    dir[a] = value_of(d[a]);
    if (dir[a] == 0.0) {
      const double sa = value_of(s[a]);
      if (sa < lo[a] || sa > hi) return T(0.0);
      continue;
    }
    T a0 = (lo[a] - s[a]) / d[a];
    T a1 = (hi - s[a]) / d[a];
    if (a0 > a1) std::swap(a0, a1);
    if (a0 > a_min) a_min = a0;
    if (a1 < a_max) a_max = a1;
  }
  if (!(value_of(a_max) - value_of(a_min) > kAlphaMergeTolerance)) return T(0.0);

  // Next grid plane after the entry point, per axis.
  std::array<int, 3> plane{}, step{};
  std::array<bool, 3> active{};
  std::array<T, 3> next;
  const double entry = value_of(a_min);
  for (int a = 0; a < 3; ++a) {
    active[a] = dir[a] != 0.0;
    if (!active[a]) continue;
    const double u = (value_of(s[a]) + entry * dir[a] - lo[a]) / v.spacing[a];
    step[a] = dir[a] > 0 ? 1 : -1;
    plane[a] = dir[a] > 0 ? static_cast<int>(std::floor(u)) + 1 : static_cast<int>(std::ceil(u)) - 1;
    if (plane[a] < 0 || plane[a] > v.dims[a]) {
      active[a] = false;
      continue;
    }
    next[a] = (lo[a] + plane[a] * v.spacing[a] - s[a]) / d[a];
  }

  const double exit = value_of(a_max);
  T cur = a_min;
  T acc(0.0);
  for (;;) {
    int axis = -1;
    double best = exit;
    for (int a = 0; a < 3; ++a)
      if (active[a] && value_of(next[a]) < best) {
        best = value_of(next[a]);
        axis = a;
      }
    const T& nxt = axis < 0 ? a_max : next[axis];
    const double seg = value_of(nxt) - value_of(cur);
    if (seg > kAlphaMergeTolerance) {
      const double mid = 0.5 * (value_of(cur) + value_of(nxt));
      std::array<int, 3> idx{};
      for (int a = 0; a < 3; ++a) {
        const double u = (value_of(s[a]) + mid * dir[a] - lo[a]) / v.spacing[a];
        // Midpoints exactly on a face resolve to the lower-index voxel.
        idx[a] = std::clamp(static_cast<int>(std::ceil(u)) - 1, 0, v.dims[a] - 1);
      }
      const double mu = v.at(idx[0], idx[1], idx[2]);
      if (mu != 0.0) acc += (nxt - cur) * mu;
      cur = nxt;
    }
    if (axis < 0) break;
    plane[axis] += step[axis];
    if (plane[axis] < 0 || plane[axis] > v.dims[axis])
      active[axis] = false;
    else
      next[axis] = (lo[axis] + plane[axis] * v.spacing[axis] - s[axis]) / d[axis];
  }
  using std::sqrt;
  return sqrt(len2) * acc;
}

template double siddon_raycast_t<double>(const Volume&, const Vec3<double>&, const Vec3<double>&);
template Dual6 siddon_raycast_t<Dual6>(const Volume&, const Vec3<Dual6>&, const Vec3<Dual6>&);

double siddon_raycast(const Volume& v, const Eigen::Vector3d& s, const Eigen::Vector3d& p) {
  return siddon_raycast_t<double>(v, s, p);
}

namespace {

std::vector<int> traced_pixels(const Detector& d, const std::optional<PatchSet>& patches,
                               std::vector<std::uint8_t>* mask_out) {
  std::vector<int> ids;
  if (!patches) {
    ids.resize(d.pixel_count());
    for (int i = 0; i < d.pixel_count(); ++i) ids[i] = i;
    return ids;
  }
  *mask_out = patch_mask(*patches, d.height, d.width);
  for (int i = 0; i < d.pixel_count(); ++i)
    if ((*mask_out)[i]) ids.push_back(i);
  return ids;
}

Vec3<Dual6> seed_left_perturbation(const Eigen::Vector3d& x) {
  // d/d(eps) of exp(eps) x at eps = 0 is [-hat(x) | I].
  Vec3<Dual6> j;
  for (int i = 0; i < 3; ++i) j[i] = Dual6(x[i]);
  j[0].d = {0.0, x.z(), -x.y(), 1.0, 0.0, 0.0};
  j[1].d = {-x.z(), 0.0, x.x(), 0.0, 1.0, 0.0};
  j[2].d = {x.y(), -x.x(), 0.0, 0.0, 0.0, 1.0};
  return j;
}

}  // namespace

Image render(const Volume& v, const Pose& pose, const Detector& d,
             const std::optional<PatchSet>& patches, RenderOptions opts) {
  Image img(d.height, d.width);
  const std::vector<int> ids = traced_pixels(d, patches, &img.mask);
  const Eigen::Vector3d s = pose * d.source;
  parallel_for(static_cast<int>(ids.size()), opts.threads, [&](int n) {
    const int i = ids[n];
    img.pixels[i] = siddon_raycast_t<double>(v, s, pose * d.pixel_targets[i]);
  }, 64);
  return img;
}

RenderJacobian render_with_jacobian(const Volume& v, const Pose& pose, const Detector& d,
                                    const std::optional<PatchSet>& patches, RenderOptions opts) {
  RenderJacobian out;
  out.image = Image(d.height, d.width);
  out.gradients = PixelGradients::Zero(d.pixel_count(), 6);
  const std::vector<int> ids = traced_pixels(d, patches, &out.image.mask);
  const Vec3<Dual6> s = seed_left_perturbation(pose * d.source);
  parallel_for(static_cast<int>(ids.size()), opts.threads, [&](int n) {
    const int i = ids[n];
    const Vec3<Dual6> p = seed_left_perturbation(pose * d.pixel_targets[i]);
    const Dual6 value = siddon_raycast_t<Dual6>(v, s, p);
    out.image.pixels[i] = value.v;
    for (int k = 0; k < 6; ++k) out.gradients(i, k) = value.d[k];
  }, 64);
  return out;
}

Image preprocess_xray(const Image& raw, std::optional<double> I0, int crop) {
  if (crop < 0 || 2 * crop >= std::min(raw.height, raw.width))
    throw InvalidArgument("preprocess_xray: crop too large for image");
  Image out(raw.height - 2 * crop, raw.width - 2 * crop);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) out(r, c) = raw(r + crop, c + crop);
  const double i0 = I0 ? *I0 : *std::max_element(out.pixels.begin(), out.pixels.end());
  if (!(i0 > 0.0)) throw InvalidArgument("preprocess_xray: I0 must be positive");
  const double floor = 1e-12 * i0;
  const double log_i0 = std::log(i0);
  for (double& x : out.pixels) x = log_i0 - std::log(std::max(x, floor));
  return out;
}

}  // namespace diffreg
