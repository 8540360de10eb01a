#pragma once

// CT volume container in linear attenuation units (mm^-1).
//
// Voxel (i, j, k) occupies [origin + (i, j, k) * spacing, origin + (i+1, j+1,
// k+1) * spacing); data is stored x-fastest.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "diffreg/lie.hpp"

namespace diffreg {

enum class ScalarType { f32, f64 };

std::string to_string(ScalarType t);
ScalarType parse_scalar_type(const std::string& s);

struct Volume {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  std::vector<double> data;

  Volume() = default;
  Volume(std::array<int, 3> dims, const Eigen::Vector3d& spacing, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  double& at(int i, int j, int k) { return data[index(i, j, k)]; }
  double at(int i, int j, int k) const { return data[index(i, j, k)]; }

  /// Physical extent along each axis, dims * spacing.
  Eigen::Vector3d extent() const;
  /// World position of the center of voxel (i, j, k).
  Eigen::Vector3d voxel_center(int i, int j, int k) const;
  /// Dims, spacing and finiteness; attenuation must also be nonnegative
  /// when `require_nonnegative` is set.
  void validate(bool require_nonnegative = true) const;
};

struct VolumeMetadata {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  ScalarType dtype = ScalarType::f32;
  std::string byte_order = "little";
  double rescale_slope = 1.0;
  double rescale_intercept = 0.0;
  std::string data_file;  // relative to the metadata file when not absolute
};

VolumeMetadata read_volume_metadata(const std::filesystem::path& meta_path);

/// Loads a raw scalar file described by a JSON metadata sidecar. Applies the
/// optional affine rescale; negative attenuation is clamped to zero with a
/// warning on stderr.
Volume load_volume(const std::filesystem::path& raw_path, const std::filesystem::path& meta_path);
/// Resolves the raw file from the metadata's `data_file` entry.
Volume load_volume(const std::filesystem::path& meta_path);

/// Writes `<raw_path>` and `<meta_path>`; the metadata records the raw file
/// name relative to the metadata directory.
void save_volume(const Volume& v, const std::filesystem::path& raw_path,
                 const std::filesystem::path& meta_path, ScalarType dtype = ScalarType::f32);

/// value -> slope * value + intercept, clamping negatives to 0. Returns the
/// number of clamped voxels.
std::size_t rescale_attenuation(Volume& v, double slope, double intercept);

/// Identity rotation, translation at the center of the voxel grid,
/// (bx dx, by dy, bz dz) / 2.
Pose isocenter_pose(const Volume& v);

inline constexpr double kBoneThresholdHU = 350.0;
inline constexpr double kBonePercentile = 0.85;

/// Scales voxels with HU strictly above `threshold_hu` by `multiplier`.
Volume bone_augment(const Volume& v, double multiplier, const std::vector<double>& hu,
                    double threshold_hu = kBoneThresholdHU);
/// Without HU data the bone mask is every voxel strictly above the 85th
/// percentile of attenuation.
Volume bone_augment(const Volume& v, double multiplier);

/// c ~ Uniform[1, 10].
double sample_bone_multiplier(std::mt19937_64& rng);

}  // namespace diffreg
