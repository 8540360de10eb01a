#pragma once

// Image similarity for registration. NCC variants use population statistics
// (divide by the pixel count); every score is a similarity, higher is better.
// The *_grad variants also return d score / d moving pixel.

#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffreg/image.hpp"

namespace diffreg {

/// Standard deviations at or below this are treated as flat.
inline constexpr double kFlatSigma = 1e-8;
/// Scale value meaning "the whole image" (global NCC).
inline constexpr int kFullImage = 0;

enum class MetricKind { global_ncc, local_ncc, mncc, sparse_mncc, mse, mae };

std::string to_string(MetricKind k);
MetricKind parse_metric_kind(std::string_view name);

struct MetricConfig {
  MetricKind kind = MetricKind::sparse_mncc;
  int patch_size = 13;
  std::vector<int> scales{13, kFullImage};
  int n_patches = 100;

  void validate() const;
};

struct Score {
  double value = 0.0;
  std::vector<double> d_moving;  // same size as the moving image
};

/// Global NCC over pixels defined in both images. Throws DegenerateInput when
/// either image is flat.
double ncc(const Image& a, const Image& b);
Score ncc_grad(const Image& fixed, const Image& moving);

/// Mean NCC over all fully-overlapping patches at stride 1. Flat patches are
/// left out of the mean; throws DegenerateInput if every patch is flat.
double local_ncc(const Image& a, const Image& b, int patch_size);
Score local_ncc_grad(const Image& fixed, const Image& moving, int patch_size);

/// Mean over scales; kFullImage (or a scale covering the image) is global NCC.
double mncc(const Image& a, const Image& b, std::span<const int> scales);
Score mncc_grad(const Image& fixed, const Image& moving, std::span<const int> scales);

/// `n` centers drawn with replacement from positions whose patch lies fully
/// inside the image, uniformly or proportionally to `weights` (H x W).
PatchSet sample_patch_centers(int height, int width, int n, int patch_size, std::mt19937_64& rng,
                              const std::vector<double>* weights = nullptr);

/// Mean of (mean per-patch NCC, NCC over the union of patch pixels). The
/// moving image's mask must cover every patch.
double sparse_mncc(const Image& fixed, const Image& moving, const PatchSet& patches);
Score sparse_mncc_grad(const Image& fixed, const Image& moving, const PatchSet& patches);

double mse(const Image& a, const Image& b);
double mae(const Image& a, const Image& b);
/// Similarity -mse and its gradient.
Score neg_mse_grad(const Image& fixed, const Image& moving);
/// Similarity -mae and its (sub)gradient.
Score neg_mae_grad(const Image& fixed, const Image& moving);

/// Dispatches on config.kind. `patches` is required for sparse_mncc.
Score evaluate_similarity(const MetricConfig& config, const Image& fixed, const Image& moving,
                          const PatchSet* patches = nullptr);

}  // namespace diffreg
