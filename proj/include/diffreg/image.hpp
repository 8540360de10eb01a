#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace diffreg {

/// Row-major 2D scalar grid in absorption units. An empty mask means every
/// pixel is defined; otherwise mask[i] != 0 marks rendered pixels.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;
  std::vector<std::uint8_t> mask;

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t size() const { return pixels.size(); }
  bool sparse() const { return !mask.empty(); }
  bool defined(std::size_t i) const { return mask.empty() || mask[i] != 0; }
  double& operator()(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  double operator()(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
};

/// Square patches of odd side `patch_size` at the given (row, col) centers.
struct PatchSet {
  std::vector<std::pair<int, int>> centers;
  int patch_size = 13;

  int half() const { return patch_size / 2; }
};

/// Union of all patches, clipped to the image bounds.
std::vector<std::uint8_t> patch_mask(const PatchSet& patches, int height, int width);

}  // namespace diffreg
