#pragma once

// Rigid transforms: SE(3)/SO(3) exponential and logarithm maps, geodesic
// distances, and the Euclidean pose parameterizations compared during
// test-time optimization.
//
// Tangent vectors are ordered (omega, u): omega in radians, u in millimeters,
// matching the generator basis G1..G6 where G1..G3 are infinitesimal
// rotations about x, y, z and G4..G6 translations along x, y, z.

#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "diffreg/errors.hpp"
#include "diffreg/jet.hpp"

namespace diffreg {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Below this rotation angle the exp/log coefficients switch to Taylor series.
inline constexpr double kSmallAngle = 1e-6;
/// The logarithm refuses rotation angles within this distance of pi.
inline constexpr double kPiMargin = 1e-6;

struct Tangent {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d u = Eigen::Vector3d::Zero();

  static Tangent from_vector(const Vector6d& v) {
    return {v.head<3>(), v.tail<3>()};
  }
  Vector6d vector() const {
    Vector6d v;
    v << omega, u;
    return v;
  }
  bool is_finite() const { return omega.allFinite() && u.allFinite(); }
};

/// Rigid transform x -> R x + t. Millimeter units.
struct Pose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose translation(const Eigen::Vector3d& t) {
    return {Eigen::Matrix3d::Identity(), t};
  }
  /// Validates rigidity; throws InvalidArgument otherwise.
  static Pose from_matrix(const Eigen::Matrix4d& m, double tol = 1e-9);

  Eigen::Matrix4d matrix() const;
  /// True when R^T R = I and det R = +1 within `tol` elementwise.
  bool is_valid(double tol = 1e-9) const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& x) const { return R * x + t; }
  Pose operator*(const Pose& o) const { return {R * o.R, R * o.t + t}; }
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& T);
/// Applies T to each row of an n x 3 point array.
Eigen::MatrixX3d transform_points(const Pose& T, const Eigen::MatrixX3d& points);

template <class S>
using Vec3 = Eigen::Matrix<S, 3, 1>;
template <class S>
using Mat3 = Eigen::Matrix<S, 3, 3>;

template <class S>
struct RigidT {
  Mat3<S> R;
  Vec3<S> t;
};

template <class S>
Mat3<S> hat(const Vec3<S>& w) {
  Mat3<S> m;
  m << S(0.0), -w.z(), w.y(),  //
      w.z(), S(0.0), -w.x(),   //
      -w.y(), w.x(), S(0.0);
  return m;
}

inline Eigen::Vector3d vee(const Eigen::Matrix3d& m) {
  return {0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)),
          0.5 * (m(1, 0) - m(0, 1))};
}

namespace detail {

/// Coefficients A = sin(t)/t, B = (1 - cos t)/t^2, C = (t - sin t)/t^3 as
/// functions of t^2.
template <class S>
void so3_coefficients(const S& theta2, bool taylor, S& A, S& B, S& C) {
  if (taylor) {
    A = S(1.0) - theta2 / 6.0;
    B = S(0.5) - theta2 / 24.0;
    C = S(1.0 / 6.0) - theta2 / 120.0;
    return;
  }
  using std::sin;
  using std::sqrt;
  const S theta = sqrt(theta2);
  const S s = sin(theta);
  const S h = sin(theta * 0.5);
  A = s / theta;
  B = S(2.0) * h * h / theta2;
  C = (theta - s) / (theta2 * theta);
}

template <class S>
bool use_taylor(const S& theta2) {
  return value_of(theta2) < kSmallAngle * kSmallAngle;
}

template <class S>
RigidT<S> exp_se3_branch(const Vec3<S>& omega, const Vec3<S>& u, bool taylor) {
  const S theta2 = omega.dot(omega);
  S A, B, C;
  so3_coefficients(theta2, taylor, A, B, C);
  const Mat3<S> W = hat(omega);
  const Mat3<S> W2 = W * W;
  const Mat3<S> I = Mat3<S>::Identity();
  const Mat3<S> R = I + A * W + B * W2;
  const Mat3<S> Omega = I + B * W + C * W2;
  return {R, Omega * u};
}

}  // namespace detail

template <class S>
Mat3<S> exp_so3_t(const Vec3<S>& omega) {
  const S theta2 = omega.dot(omega);
  S A, B, C;
  detail::so3_coefficients(theta2, detail::use_taylor(theta2), A, B, C);
  const Mat3<S> W = hat(omega);
  return Mat3<S>::Identity() + A * W + B * (W * W);
}

template <class S>
RigidT<S> exp_se3_t(const Vec3<S>& omega, const Vec3<S>& u) {
  return detail::exp_se3_branch(omega, u, detail::use_taylor(omega.dot(omega)));
}

/// Closed-form exponential map. Throws InvalidArgument on non-finite input.
Pose exp_se3(const Tangent& v);
/// Canonical-branch logarithm (|omega| <= pi). Throws IllConditioned within
/// kPiMargin of pi.
Tangent log_se3(const Pose& T);

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega);
Eigen::Vector3d log_so3(const Eigen::Matrix3d& R);

/// arccos((tr(RA^T RB) - 1) / 2) with the argument clamped to [-1, 1].
double geodesic_so3(const Eigen::Matrix3d& RA, const Eigen::Matrix3d& RB);
/// The same distance evaluated as |log(RA^T RB)|.
double geodesic_so3_log(const Eigen::Matrix3d& RA, const Eigen::Matrix3d& RB);
/// |log(TA^-1 TB)| over the full 6-vector.
double geodesic_log_se3(const Pose& TA, const Pose& TB);
/// sqrt((f/2 * d_theta)^2 + |tA - tB|^2), millimeters.
double double_geodesic(const Pose& TA, const Pose& TB, double focal_length);

enum class ParamKind { se3, axis_angle, euler, quaternion, rotation6d };

inline constexpr ParamKind kAllParamKinds[] = {
    ParamKind::se3, ParamKind::axis_angle, ParamKind::euler,
    ParamKind::quaternion, ParamKind::rotation6d};

/// Number of rotational entries; the last three entries are always the
/// translation (or u for se3).
constexpr int rotation_dim(ParamKind k) {
  switch (k) {
    case ParamKind::quaternion: return 4;
    case ParamKind::rotation6d: return 6;
    default: return 3;
  }
}
constexpr int param_dim(ParamKind k) { return rotation_dim(k) + 3; }
inline constexpr int kMaxParamDim = 9;

std::string to_string(ParamKind k);
ParamKind parse_param_kind(std::string_view name);

/// Euclidean pose parameters. Layouts:
///   se3         (omega, u)
///   axis_angle  (omega, t)
///   euler       (yaw z, pitch y, roll x, t); R = Rz Ry Rx (intrinsic Z-Y-X)
///   quaternion  (w, x, y, z, t)
///   rotation6d  (first column of R, second column of R, t)
struct PoseParam {
  ParamKind kind = ParamKind::se3;
  Eigen::VectorXd values = Eigen::VectorXd::Zero(6);
};

template <class S>
RigidT<S> decode_param(ParamKind kind, std::span<const S> p) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const int rd = rotation_dim(kind);
  Vec3<S> t(p[rd], p[rd + 1], p[rd + 2]);
  switch (kind) {
    case ParamKind::se3:
      return exp_se3_t(Vec3<S>(p[0], p[1], p[2]), t);
    case ParamKind::axis_angle:
      return {exp_so3_t(Vec3<S>(p[0], p[1], p[2])), t};
    case ParamKind::euler: {
      const S ca = cos(p[0]), sa = sin(p[0]);
      const S cb = cos(p[1]), sb = sin(p[1]);
      const S cg = cos(p[2]), sg = sin(p[2]);
      Mat3<S> R;
      R << ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg,  //
          sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg,   //
          -sb, cb * sg, cb * cg;
      return {R, t};
    }
    case ParamKind::quaternion: {
      const S n2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
      if (!(value_of(n2) > 1e-24)) throw InvalidArgument("zero-norm quaternion");
      const S n = sqrt(n2);
      const S w = p[0] / n, x = p[1] / n, y = p[2] / n, z = p[3] / n;
      Mat3<S> R;
      R << S(1.0) - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z),
          2.0 * (x * z + w * y),  //
          2.0 * (x * y + w * z), S(1.0) - 2.0 * (x * x + z * z),
          2.0 * (y * z - w * x),  //
          2.0 * (x * z - w * y), 2.0 * (y * z + w * x),
          S(1.0) - 2.0 * (x * x + y * y);
      return {R, t};
    }
    case ParamKind::rotation6d: {
      const Vec3<S> a1(p[0], p[1], p[2]);
      const Vec3<S> a2(p[3], p[4], p[5]);
      const S n1 = a1.dot(a1);
      if (!(value_of(n1) > 1e-24))
        throw InvalidArgument("degenerate rotation6d: zero first column");
      const Vec3<S> b1 = a1 / sqrt(n1);
      const Vec3<S> r2 = a2 - b1.dot(a2) * b1;
      const S n2 = r2.dot(r2);
      if (!(value_of(n2) > 1e-24))
        throw InvalidArgument("degenerate rotation6d: parallel columns");
      const Vec3<S> b2 = r2 / sqrt(n2);
      Mat3<S> R;
      R.col(0) = b1;
      R.col(1) = b2;
      R.col(2) = b1.cross(b2);
      return {R, t};
    }
  }
  throw InvalidArgument("unknown parameterization");
}

Pose param_to_pose(const PoseParam& p);
PoseParam pose_to_param(const Pose& T, ParamKind kind);

/// 6 x D matrix mapping a parameter increment dp to the left se(3)
/// perturbation eps with param_to_pose(p + dp) ~ exp(eps) param_to_pose(p).
Matrix6Xd param_jacobian(const PoseParam& p);

}  // namespace diffreg
