#pragma once

// Pinhole X-ray camera: intrinsics, the canonical detector, and conversion
// from imaging-system extrinsics to the renderer's camera convention.
//
// Canonical camera frame: the source sits at (f/2, 0, 0) and the detector
// plane at x = -f/2, so rays travel along -x. Image columns run along +y and
// image rows along +z (row index increases downward in raster order). Pixel
// targets are pixel centers.

#include <vector>

#include <Eigen/Core>

#include "diffreg/lie.hpp"

namespace diffreg {

struct Intrinsics {
  double fx = 0, fy = 0;            // pixels
  double cx = 0, cy = 0;            // pixels
  double delta_x = 0, delta_y = 0;  // mm / pixel
  int height = 0, width = 0;

  void validate() const;
  /// [[fx, 0, cx], [0, fy, cy], [0, 0, 1]]
  Eigen::Matrix3d matrix() const;
};

struct DetectorParams {
  double focal_length;     // mm, source-to-detector distance
  Eigen::Vector2d offset;  // principal point offset (c'x, c'y), mm
};

/// f = (fx dX + fy dY) / 2, c'x = dX (W/2 - cx), c'y = dY (H/2 - cy).
DetectorParams parse_intrinsics(const Intrinsics& k);

struct Detector {
  double focal_length = 0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
  double delta_x = 0, delta_y = 0;
  int height = 0, width = 0;
  Eigen::Vector3d source = Eigen::Vector3d::Zero();
  /// height * width targets, row-major (index = row * width + col).
  std::vector<Eigen::Vector3d> pixel_targets;

  int pixel_count() const { return height * width; }
  const Eigen::Vector3d& target(int row, int col) const {
    return pixel_targets[static_cast<std::size_t>(row) * width + col];
  }
};

Detector make_detector(double focal_length, const Eigen::Vector2d& offset, double delta_x,
                       double delta_y, int height, int width);
Detector make_detector(const Intrinsics& k);

/// Axis permutation block A of the imaging-system conversion.
Pose imaging_axis_permutation();

/// T~ = T^-1 A B with B = translate(-f/2, 0, 0). `T` is an imaging-system
/// extrinsic (camera at origin looking down -z).
Pose convert_extrinsic(const Pose& T, double focal_length);
/// Algebraic inverse of convert_extrinsic: T = (T~ B^-1 A^-1)^-1.
Pose convert_extrinsic_inverse(const Pose& renderer_pose, double focal_length);

/// K [R | t] M, one column per landmark. No perspective division.
Eigen::Matrix3Xd project_landmarks(const Eigen::Matrix3d& K, const Pose& T,
                                   const Eigen::Matrix3Xd& M);
/// Perspective-divided pixel coordinates of project_landmarks, for display.
Eigen::Matrix2Xd project_landmarks_perspective(const Eigen::Matrix3d& K, const Pose& T,
                                               const Eigen::Matrix3Xd& M);

}  // namespace diffreg
