#pragma once

// Registration accuracy: mean target registration error over 3D landmarks
// and success-rate summaries.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "diffreg/lie.hpp"

namespace diffreg {

struct LandmarkSet {
  Eigen::Matrix3Xd points;  // mm, volume frame
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(points.cols()); }
  void validate() const;
};

/// CSV with header `label,x,y,z`.
LandmarkSet read_landmarks(const std::filesystem::path& path);
void write_landmarks(const LandmarkSet& m, const std::filesystem::path& path);

enum class MtreMode {
  literal,             // (1/m) || K ([R|t] - [R^|t^]) M ||_F
  per_landmark_mean,   // mean over landmarks of the column norms
};

std::string to_string(MtreMode mode);

/// `E_true`, `E_est` are extrinsics mapping volume points into the camera
/// frame.
double mtre(const Eigen::Matrix3d& K, const Pose& E_true, const Pose& E_est, const LandmarkSet& M,
            MtreMode mode = MtreMode::literal);

/// mTRE between two renderer poses (camera-to-volume), with K = I and the
/// extrinsic taken as the inverse pose.
double pose_mtre(const Pose& T_true, const Pose& T_est, const LandmarkSet& M,
                 MtreMode mode = MtreMode::literal);

struct SuccessSummary {
  int n = 0;
  double threshold = 1.0;
  double rate = 0.0;  // fraction strictly below threshold
  double median = 0.0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for n = 1
};

/// Throws InvalidArgument on an empty list.
SuccessSummary smsr(const std::vector<double>& errors, double threshold = 1.0);

}  // namespace diffreg
