#include "diffreg/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "diffreg/errors.hpp"

namespace diffreg {

std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::global_ncc: return "global_ncc";
    case MetricKind::local_ncc: return "local_ncc";
    case MetricKind::mncc: return "mncc";
    case MetricKind::sparse_mncc: return "sparse_mncc";
    case MetricKind::mse: return "mse";
    case MetricKind::mae: return "mae";
  }
  return "unknown";
}

MetricKind parse_metric_kind(std::string_view name) {
  for (MetricKind k : {MetricKind::global_ncc, MetricKind::local_ncc, MetricKind::mncc,
                       MetricKind::sparse_mncc, MetricKind::mse, MetricKind::mae})
    if (to_string(k) == name) return k;
  if (name == "ncc") return MetricKind::global_ncc;
  throw InvalidArgument("unknown metric: " + std::string(name));
}

void MetricConfig::validate() const {
  if (patch_size < 3 || patch_size % 2 == 0)
    throw InvalidArgument("patch size must be odd and >= 3");
  if (n_patches < 1) throw InvalidArgument("n_patches must be >= 1");
  if (scales.empty()) throw InvalidArgument("mncc needs at least one scale");
  for (int s : scales)
    if (s != kFullImage && (s < 3 || s % 2 == 0))
      throw InvalidArgument("mncc scales must be odd patch sizes >= 3 or full");
}

namespace {

void require_same_dims(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width)
    throw InvalidArgument("image dimensions differ");
}

bool both_defined(const Image& a, const Image& b, std::size_t i) {
  return a.defined(i) && b.defined(i);
}

/// Centered second moments of one pixel set.
struct Moments {
  double n = 0, ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;

  bool flat() const {
    return !(std::sqrt(saa / n) > kFlatSigma) || !(std::sqrt(sbb / n) > kFlatSigma);
  }
  double ncc() const { return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0); }
  // d ncc / d b_k = alpha (a_k - ma) - beta (b_k - mb)
  double alpha() const { return 1.0 / std::sqrt(saa * sbb); }
  double beta() const { return (sab / std::sqrt(saa * sbb)) / sbb; }
};

template <class ForEach>
Moments moments(const Image& a, const Image& b, ForEach&& for_each) {
  Moments m;
  double sa = 0, sb = 0;
  for_each([&](std::size_t i) {
    sa += a.pixels[i];
    sb += b.pixels[i];
    m.n += 1;
  });
  if (m.n == 0) return m;
  m.ma = sa / m.n;
  m.mb = sb / m.n;
  for_each([&](std::size_t i) {
    const double da = a.pixels[i] - m.ma, db = b.pixels[i] - m.mb;
    m.saa += da * da;
    m.sbb += db * db;
    m.sab += da * db;
  });
  return m;
}

auto patch_pixels(int width, int r, int c, int half) {
  return [=](auto&& fn) {
    for (int i = r - half; i <= r + half; ++i) {
      const std::size_t row = static_cast<std::size_t>(i) * width;
      for (int j = c - half; j <= c + half; ++j) fn(row + j);
    }
  };
}

bool patch_defined(const Image& img, int r, int c, int half) {
  if (img.mask.empty()) return true;
  bool ok = true;
  patch_pixels(img.width, r, c, half)([&](std::size_t i) { ok = ok && img.mask[i] != 0; });
  return ok;
}

Moments global_moments(const Image& a, const Image& b) {
  return moments(a, b, [&](auto&& fn) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (both_defined(a, b, i)) fn(i);
  });
}

bool is_global_scale(int scale, const Image& img) {
  return scale == kFullImage || (scale >= img.height && scale >= img.width);
}

/// Box sum over the window of centers [r-h, r+h] x [c-h, c+h] using a
/// summed-area table of a per-center map defined on the valid-center grid.
class CenterBoxSum {
 public:
  CenterBoxSum(const std::vector<double>& values, int rows, int cols)
      : rows_(rows), cols_(cols), sat_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {
    for (int i = 0; i < rows; ++i) {
      double run = 0;
      for (int j = 0; j < cols; ++j) {
        run += values[static_cast<std::size_t>(i) * cols + j];
        at(i + 1, j + 1) = at(i, j + 1) + run;
      }
    }
  }
  /// Sum over center indices [r0, r1] x [c0, c1], clipped.
  double sum(int r0, int r1, int c0, int c1) const {
    r0 = std::max(r0, 0);
    c0 = std::max(c0, 0);
    r1 = std::min(r1, rows_ - 1);
    c1 = std::min(c1, cols_ - 1);
    if (r0 > r1 || c0 > c1) return 0.0;
    return at(r1 + 1, c1 + 1) - at(r0, c1 + 1) - at(r1 + 1, c0) + at(r0, c0);
  }

 private:
  double& at(int i, int j) { return sat_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
  double at(int i, int j) const { return sat_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
  int rows_, cols_;
  std::vector<double> sat_;
};

Score local_ncc_impl(const Image& fixed, const Image& moving, int patch_size, bool want_grad) {
  require_same_dims(fixed, moving);
  if (patch_size < 1 || patch_size % 2 == 0) throw InvalidArgument("patch size must be odd");
  if (fixed.height < patch_size || fixed.width < patch_size)
    throw InvalidArgument("image smaller than patch");
  const int h = patch_size / 2;
  const int rows = fixed.height - 2 * h, cols = fixed.width - 2 * h;
  const std::size_t nc = static_cast<std::size_t>(rows) * cols;

  std::vector<double> alpha, alpha_ma, beta, beta_mb;
  if (want_grad) {
    alpha.assign(nc, 0.0);
    alpha_ma.assign(nc, 0.0);
    beta.assign(nc, 0.0);
    beta_mb.assign(nc, 0.0);
  }
  double total = 0;
  long valid = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const int r = i + h, c = j + h;
      if (!patch_defined(fixed, r, c, h) || !patch_defined(moving, r, c, h)) continue;
      const Moments m = moments(fixed, moving, patch_pixels(fixed.width, r, c, h));
      if (m.flat()) continue;
      total += m.ncc();
      ++valid;
      if (want_grad) {
        const std::size_t k = static_cast<std::size_t>(i) * cols + j;
        alpha[k] = m.alpha();
        alpha_ma[k] = m.alpha() * m.ma;
        beta[k] = m.beta();
        beta_mb[k] = m.beta() * m.mb;
      }
    }
  if (valid == 0) throw DegenerateInput("local NCC: every patch is flat");

  Score s;
  s.value = total / static_cast<double>(valid);
  if (!want_grad) return s;
  s.d_moving.assign(moving.size(), 0.0);
  const CenterBoxSum A(alpha, rows, cols), AM(alpha_ma, rows, cols);
  const CenterBoxSum B(beta, rows, cols), BM(beta_mb, rows, cols);
  const double inv = 1.0 / static_cast<double>(valid);
  for (int r = 0; r < fixed.height; ++r)
    for (int c = 0; c < fixed.width; ++c) {
      // Centers (in center-grid indices) whose patch contains pixel (r, c).
      const int r0 = r - 2 * h, r1 = r, c0 = c - 2 * h, c1 = c;
      const std::size_t k = static_cast<std::size_t>(r) * fixed.width + c;
      const double g = fixed.pixels[k] * A.sum(r0, r1, c0, c1) - AM.sum(r0, r1, c0, c1) -
                       moving.pixels[k] * B.sum(r0, r1, c0, c1) + BM.sum(r0, r1, c0, c1);
      s.d_moving[k] = g * inv;
    }
  return s;
}

Score global_ncc_impl(const Image& fixed, const Image& moving, bool want_grad) {
  require_same_dims(fixed, moving);
  const Moments m = global_moments(fixed, moving);
  if (m.n == 0 || m.flat()) throw DegenerateInput("NCC: image has near-zero variance");
  Score s;
  s.value = m.ncc();
  if (!want_grad) return s;
  s.d_moving.assign(moving.size(), 0.0);
  const double al = m.alpha(), be = m.beta();
  for (std::size_t i = 0; i < moving.size(); ++i)
    if (both_defined(fixed, moving, i))
      s.d_moving[i] = al * (fixed.pixels[i] - m.ma) - be * (moving.pixels[i] - m.mb);
  return s;
}

Score mncc_impl(const Image& fixed, const Image& moving, std::span<const int> scales,
                bool want_grad) {
  if (scales.empty()) throw InvalidArgument("mncc needs at least one scale");
  Score s;
  if (want_grad) s.d_moving.assign(moving.size(), 0.0);
  for (int scale : scales) {
    const Score part = is_global_scale(scale, fixed)
                           ? global_ncc_impl(fixed, moving, want_grad)
                           : local_ncc_impl(fixed, moving, scale, want_grad);
    s.value += part.value;
    for (std::size_t i = 0; i < s.d_moving.size(); ++i) s.d_moving[i] += part.d_moving[i];
  }
  const double inv = 1.0 / static_cast<double>(scales.size());
  s.value *= inv;
  for (double& g : s.d_moving) g *= inv;
  return s;
}

Score sparse_mncc_impl(const Image& fixed, const Image& moving, const PatchSet& patches,
                       bool want_grad) {
  require_same_dims(fixed, moving);
  if (patches.centers.empty()) throw InvalidArgument("sparse mNCC: empty patch set");
  const int h = patches.half();
  std::vector<std::uint8_t> rendered = patch_mask(patches, moving.height, moving.width);
  for (const auto& [r, c] : patches.centers) {
    if (r - h < 0 || c - h < 0 || r + h >= moving.height || c + h >= moving.width)
      throw InvalidArgument("sparse mNCC: patch extends past the image");
    if (!patch_defined(moving, r, c, h))
      throw InvalidArgument("sparse mNCC: moving image mask does not cover every patch");
  }

  Score s;
  if (want_grad) s.d_moving.assign(moving.size(), 0.0);

  // Patch term, averaged over non-flat patches in index order.
  std::vector<Moments> stats;
  stats.reserve(patches.centers.size());
  long valid = 0;
  double patch_total = 0;
  for (const auto& [r, c] : patches.centers) {
    stats.push_back(moments(fixed, moving, patch_pixels(moving.width, r, c, h)));
    if (!stats.back().flat()) {
      ++valid;
      patch_total += stats.back().ncc();
    }
  }
  if (valid == 0) throw DegenerateInput("sparse mNCC: every patch is flat");
  const double patch_term = patch_total / static_cast<double>(valid);

  // Global term over the rendered pixel union.
  const Moments g = moments(fixed, moving, [&](auto&& fn) {
    for (std::size_t i = 0; i < rendered.size(); ++i)
      if (rendered[i]) fn(i);
  });
  if (g.flat()) throw DegenerateInput("sparse mNCC: rendered pixels have near-zero variance");
  s.value = 0.5 * (patch_term + g.ncc());
  if (!want_grad) return s;

  const double wp = 0.5 / static_cast<double>(valid);
  for (std::size_t p = 0; p < patches.centers.size(); ++p) {
    const Moments& m = stats[p];
    if (m.flat()) continue;
    const double al = m.alpha() * wp, be = m.beta() * wp;
    const auto [r, c] = patches.centers[p];
    patch_pixels(moving.width, r, c, h)([&](std::size_t i) {
      s.d_moving[i] += al * (fixed.pixels[i] - m.ma) - be * (moving.pixels[i] - m.mb);
    });
  }
  const double al = 0.5 * g.alpha(), be = 0.5 * g.beta();
  for (std::size_t i = 0; i < rendered.size(); ++i)
    if (rendered[i]) s.d_moving[i] += al * (fixed.pixels[i] - g.ma) - be * (moving.pixels[i] - g.mb);
  return s;
}

template <class PixelLoss>
Score mean_loss(const Image& fixed, const Image& moving, bool want_grad, PixelLoss&& loss) {
  require_same_dims(fixed, moving);
  double total = 0, n = 0;
  for (std::size_t i = 0; i < moving.size(); ++i)
    if (both_defined(fixed, moving, i)) {
      total += loss(moving.pixels[i] - fixed.pixels[i]).first;
      n += 1;
    }
  if (n == 0) throw DegenerateInput("no pixels defined in both images");
  Score s;
  s.value = total / n;
  if (want_grad) {
    s.d_moving.assign(moving.size(), 0.0);
    for (std::size_t i = 0; i < moving.size(); ++i)
      if (both_defined(fixed, moving, i))
        s.d_moving[i] = loss(moving.pixels[i] - fixed.pixels[i]).second / n;
  }
  return s;
}

std::pair<double, double> squared(double e) { return {e * e, 2.0 * e}; }
std::pair<double, double> absolute(double e) {
  return {std::abs(e), e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0)};
}

Score negate(Score s) {
  s.value = -s.value;
  for (double& g : s.d_moving) g = -g;
  return s;
}

}  // namespace

double ncc(const Image& a, const Image& b) { return global_ncc_impl(a, b, false).value; }
Score ncc_grad(const Image& fixed, const Image& moving) {
  return global_ncc_impl(fixed, moving, true);
}

double local_ncc(const Image& a, const Image& b, int patch_size) {
  return local_ncc_impl(a, b, patch_size, false).value;
}
Score local_ncc_grad(const Image& fixed, const Image& moving, int patch_size) {
  return local_ncc_impl(fixed, moving, patch_size, true);
}

double mncc(const Image& a, const Image& b, std::span<const int> scales) {
  return mncc_impl(a, b, scales, false).value;
}
Score mncc_grad(const Image& fixed, const Image& moving, std::span<const int> scales) {
  return mncc_impl(fixed, moving, scales, true);
}

PatchSet sample_patch_centers(int height, int width, int n, int patch_size, std::mt19937_64& rng,
                              const std::vector<double>* weights) {
  if (n < 1) throw InvalidArgument("need at least one patch");
  if (patch_size < 1 || patch_size % 2 == 0) throw InvalidArgument("patch size must be odd");
  if (height < patch_size || width < patch_size) throw InvalidArgument("image smaller than patch");
  PatchSet set;
  set.patch_size = patch_size;
  set.centers.reserve(n);
  const int h = patch_size / 2;
  const int rows = height - 2 * h, cols = width - 2 * h;
  if (!weights) {
    std::uniform_int_distribution<int> row(h, height - 1 - h), col(h, width - 1 - h);
    for (int k = 0; k < n; ++k) {
      const int r = row(rng);
      set.centers.emplace_back(r, col(rng));
    }
    return set;
  }
  if (weights->size() != static_cast<std::size_t>(height) * width)
    throw InvalidArgument("weight map does not match image size");
  std::vector<double> w(static_cast<std::size_t>(rows) * cols);
  double total = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double x = (*weights)[static_cast<std::size_t>(i + h) * width + (j + h)];
      if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("weights must be finite and >= 0");
      w[static_cast<std::size_t>(i) * cols + j] = x;
      total += x;
    }
  if (!(total > 0.0)) throw InvalidArgument("weights are zero at every valid center");
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  for (int k = 0; k < n; ++k) {
    const std::size_t idx = pick(rng);
    set.centers.emplace_back(static_cast<int>(idx / cols) + h, static_cast<int>(idx % cols) + h);
  }
  return set;
}

double sparse_mncc(const Image& fixed, const Image& moving, const PatchSet& patches) {
  return sparse_mncc_impl(fixed, moving, patches, false).value;
}
Score sparse_mncc_grad(const Image& fixed, const Image& moving, const PatchSet& patches) {
  return sparse_mncc_impl(fixed, moving, patches, true);
}

double mse(const Image& a, const Image& b) { return mean_loss(a, b, false, squared).value; }
double mae(const Image& a, const Image& b) { return mean_loss(a, b, false, absolute).value; }
Score neg_mse_grad(const Image& fixed, const Image& moving) {
  return negate(mean_loss(fixed, moving, true, squared));
}
Score neg_mae_grad(const Image& fixed, const Image& moving) {
  return negate(mean_loss(fixed, moving, true, absolute));
}

Score evaluate_similarity(const MetricConfig& config, const Image& fixed, const Image& moving,
                          const PatchSet* patches) {
  switch (config.kind) {
    case MetricKind::global_ncc: return ncc_grad(fixed, moving);
    case MetricKind::local_ncc: return local_ncc_grad(fixed, moving, config.patch_size);
    case MetricKind::mncc: return mncc_grad(fixed, moving, config.scales);
    case MetricKind::sparse_mncc:
      if (!patches) throw InvalidArgument("sparse mNCC requires a patch set");
      return sparse_mncc_grad(fixed, moving, *patches);
    case MetricKind::mse: return neg_mse_grad(fixed, moving);
    case MetricKind::mae: return neg_mae_grad(fixed, moving);
  }
  throw InvalidArgument("unknown metric");
}

}  // namespace diffreg
