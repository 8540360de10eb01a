#include "diffreg/geometry.hpp"

#include <string>

namespace diffreg {

void Intrinsics::validate() const {
  if (!(fx > 0 && fy > 0)) throw InvalidArgument("intrinsics: focal lengths must be positive");
  if (!(delta_x > 0 && delta_y > 0))
    throw InvalidArgument("intrinsics: pixel spacings must be positive");
  if (height < 2 || width < 2) throw InvalidArgument("intrinsics: detector must be at least 2x2");
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d K;
  K << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return K;
}

DetectorParams parse_intrinsics(const Intrinsics& k) {
  k.validate();
  const double f = 0.5 * (k.fx * k.delta_x + k.fy * k.delta_y);
  const Eigen::Vector2d offset(k.delta_x * (0.5 * k.width - k.cx),
                               k.delta_y * (0.5 * k.height - k.cy));
  return {f, offset};
}

Detector make_detector(double focal_length, const Eigen::Vector2d& offset, double delta_x,
                       double delta_y, int height, int width) {
  if (!(focal_length > 0)) throw InvalidArgument("detector: focal length must be positive");
  if (!(delta_x > 0 && delta_y > 0)) throw InvalidArgument("detector: spacing must be positive");
  if (height < 1 || width < 1) throw InvalidArgument("detector: empty pixel grid");
  Detector d;
  d.focal_length = focal_length;
  d.offset = offset;
  d.delta_x = delta_x;
  d.delta_y = delta_y;
  d.height = height;
  d.width = width;
  d.source = Eigen::Vector3d(0.5 * focal_length, 0, 0);
  d.pixel_targets.reserve(static_cast<std::size_t>(height) * width);
  const double col0 = 0.5 * (width - 1);
  const double row0 = 0.5 * (height - 1);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      d.pixel_targets.emplace_back(-0.5 * focal_length, (c - col0) * delta_x + offset.x(),
                                   (r - row0) * delta_y + offset.y());
  return d;
}

Detector make_detector(const Intrinsics& k) {
  const auto p = parse_intrinsics(k);
  return make_detector(p.focal_length, p.offset, k.delta_x, k.delta_y, k.height, k.width);
}

Pose imaging_axis_permutation() {
  Pose A;
  A.R << 0, 0, -1, 0, 1, 0, 1, 0, 0;
  return A;
}

namespace {
Pose half_focal_shift(double f) { return Pose::translation({-0.5 * f, 0, 0}); }
}  // namespace

Pose convert_extrinsic(const Pose& T, double focal_length) {
  return inverse(T) * imaging_axis_permutation() * half_focal_shift(focal_length);
}

Pose convert_extrinsic_inverse(const Pose& renderer_pose, double focal_length) {
  return inverse(renderer_pose * inverse(half_focal_shift(focal_length)) *
                 inverse(imaging_axis_permutation()));
}

Eigen::Matrix3Xd project_landmarks(const Eigen::Matrix3d& K, const Pose& T,
                                   const Eigen::Matrix3Xd& M) {
  if (M.cols() < 1) throw InvalidArgument("project_landmarks: no landmarks");
  Eigen::Matrix3Xd cam = T.R * M;
  cam.colwise() += T.t;
  return K * cam;
}

Eigen::Matrix2Xd project_landmarks_perspective(const Eigen::Matrix3d& K, const Pose& T,
                                               const Eigen::Matrix3Xd& M) {
  const Eigen::Matrix3Xd h = project_landmarks(K, T, M);
  return h.colwise().hnormalized();
}

}  // namespace diffreg
