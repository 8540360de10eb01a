#pragma once

// File formats shared by the command-line tools: images (raw scalars plus a
// JSON sidecar, optional PGM preview), poses and intrinsics.

#include <filesystem>

#include <nlohmann/json.hpp>

#include "diffreg/geometry.hpp"
#include "diffreg/image.hpp"
#include "diffreg/lie.hpp"
#include "diffreg/volume.hpp"

namespace diffreg {

/// Writes `<stem>.raw` (row-major scalars), `<stem>.json` and, for sparse
/// images, `<stem>.mask.raw` (one byte per pixel). Returns the sidecar path.
std::filesystem::path save_image(const Image& img, const std::filesystem::path& stem,
                                 ScalarType dtype = ScalarType::f32);
/// Accepts the sidecar path or the stem.
Image load_image(const std::filesystem::path& path);

/// 8-bit preview scaled to the image's [min, max]; masked-out pixels are 0.
void write_pgm(const Image& img, const std::filesystem::path& path);

/// JSON with `matrix` (4x4 row-major nested arrays) or `se3` (omega, u), or
/// plain text holding 16 (row-major matrix) or 6 (se3) numbers.
Pose read_pose(const std::filesystem::path& path);
/// Writes JSON with both `matrix` and `se3` entries.
void write_pose(const Pose& pose, const std::filesystem::path& path);
nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);

/// JSON object with fx, fy, cx, cy, delta_x, delta_y, height, width.
Intrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const Intrinsics& k, const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace diffreg
