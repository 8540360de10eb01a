#pragma once

// Digitally reconstructed radiographs by Siddon voxel traversal.
//
// Each pixel value is the absorption |p - s| * sum_m V[mid_m] (a_{m+1} - a_m)
// over the segments between consecutive intersections of the ray
// s + a (p - s) with the voxel grid planes, restricted to a in [0, 1].
// Gradients are taken with respect to a left se(3) perturbation of the camera
// pose, d/d(eps) I(exp(eps) T) at eps = 0, by threading Dual6 numbers through
// the pose action, the ray setup and the traversal.

#include <optional>

#include <Eigen/Core>

#include "diffreg/geometry.hpp"
#include "diffreg/image.hpp"
#include "diffreg/jet.hpp"
#include "diffreg/lie.hpp"
#include "diffreg/volume.hpp"

namespace diffreg {

/// Consecutive plane intersections closer than this are merged.
inline constexpr double kAlphaMergeTolerance = 1e-12;

template <class T>
T siddon_raycast_t(const Volume& v, const Vec3<T>& s, const Vec3<T>& p);

/// Throws InvalidArgument when s == p. Rays missing the volume return 0.
double siddon_raycast(const Volume& v, const Eigen::Vector3d& s, const Eigen::Vector3d& p);

struct RenderOptions {
  int threads = 1;
};

/// `pose` places the canonical detector in the volume's world frame. With
/// patches, only pixels inside the patch union are traced; the rest are 0 and
/// the result's mask records the traced set.
Image render(const Volume& v, const Pose& pose, const Detector& d,
             const std::optional<PatchSet>& patches = std::nullopt, RenderOptions opts = {});

using PixelGradients = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;

struct RenderJacobian {
  Image image;
  /// One row per pixel: d pixel / d (omega, u) of the left perturbation.
  /// Rows of untraced pixels are zero.
  PixelGradients gradients;
};

RenderJacobian render_with_jacobian(const Volume& v, const Pose& pose, const Detector& d,
                                    const std::optional<PatchSet>& patches = std::nullopt,
                                    RenderOptions opts = {});

/// Converts raw detector intensities to absorption: crop `crop` pixels from
/// every side, then log(I0) - log(max(I, 1e-12 I0)). I0 defaults to the
/// maximum of the cropped image.
Image preprocess_xray(const Image& raw, std::optional<double> I0 = std::nullopt, int crop = 0);

}  // namespace diffreg
