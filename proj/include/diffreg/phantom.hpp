#pragma once

// Seeded synthetic attenuation volumes standing in for CT.
//
//   cube     0.02 mm^-1 everywhere, 0.04 mm^-1 in the central block of half
//            the extent per axis
//   spheres  a 0.02 box body holding at least three disjoint dense spheres
//            (0.035..0.07) at seeded positions
//   hip      body, a pelvic ring, two femoral heads with shafts and an
//            offset sacral block
//
// Voxels are sampled at their centers, so boundaries are hard edges.

#include <array>
#include <cstdint>
#include <string>

#include "diffreg/eval.hpp"
#include "diffreg/geometry.hpp"
#include "diffreg/volume.hpp"

namespace diffreg {

enum class PhantomKind { cube, spheres, hip };

std::string to_string(PhantomKind k);
PhantomKind parse_phantom_kind(const std::string& name);

struct PhantomConfig {
  PhantomKind kind = PhantomKind::spheres;
  std::array<int, 3> dims{64, 64, 64};
  Eigen::Vector3d spacing{2.0, 2.0, 2.0};
  std::uint64_t seed = 0;
};

struct Phantom {
  Volume volume;
  /// 8 corners and the centroid of the dense structures' bounding box.
  LandmarkSet landmarks;
};

Phantom make_phantom(const PhantomConfig& cfg);

/// Square detector with source-to-detector distance `focal_length` whose
/// field at the isocenter is 1.25x the largest volume extent, so corner
/// rays miss the volume.
Intrinsics default_intrinsics(const Volume& v, int pixels = 128, double focal_length = 1000.0);

}  // namespace diffreg
