#include "diffreg/lie.hpp"

#include <algorithm>
#include <array>
#include <numbers>

namespace diffreg {

Pose Pose::from_matrix(const Eigen::Matrix4d& m, double tol) {
  Pose T{m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  const Eigen::RowVector4d last(0, 0, 0, 1);
  if (!m.allFinite() || (m.row(3) - last).cwiseAbs().maxCoeff() > tol)
    throw InvalidArgument("pose matrix: last row must be (0, 0, 0, 1)");
  if (!T.is_valid(tol)) throw InvalidArgument("pose matrix: rotation block is not a rotation");
  return T;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = t;
  return m;
}

bool Pose::is_valid(double tol) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Pose compose(const Pose& a, const Pose& b) { return a * b; }

Pose inverse(const Pose& T) {
  const Eigen::Matrix3d Rt = T.R.transpose();
  return {Rt, -(Rt * T.t)};
}

Eigen::MatrixX3d transform_points(const Pose& T, const Eigen::MatrixX3d& points) {
  Eigen::MatrixX3d out = points * T.R.transpose();
  out.rowwise() += T.t.transpose();
  return out;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega) {
  if (!omega.allFinite()) throw InvalidArgument("exp_so3: non-finite input");
  return exp_so3_t<double>(omega);
}

Pose exp_se3(const Tangent& v) {
  if (!v.is_finite()) throw InvalidArgument("exp_se3: non-finite tangent");
  const auto rt = exp_se3_t<double>(v.omega, v.u);
  return {rt.R, rt.t};
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& R) {
  const double cos_theta = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const Eigen::Vector3d w = vee(R);  // sin(theta) * axis
  const double sin_theta = w.norm();
  const double theta = std::atan2(sin_theta, cos_theta);
  if (theta > std::numbers::pi - kPiMargin)
    throw IllConditioned("log_so3: rotation angle within 1e-6 of pi");
  if (theta < kSmallAngle) return w * (1.0 + theta * theta / 6.0);
  if (cos_theta > -0.7) return w * (theta / sin_theta);

  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part (1 - cos theta) a a^T and take its sign from w.
  const Eigen::Matrix3d B =
      0.5 * (R + R.transpose()) - cos_theta * Eigen::Matrix3d::Identity();
  int k = 0;
  B.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = B.col(k) / std::sqrt(B(k, k) * (1.0 - cos_theta));
  if (axis.dot(w) < 0.0) axis = -axis;
  return theta * axis.normalized();
}

Tangent log_se3(const Pose& T) {
  if (!T.R.allFinite() || !T.t.allFinite()) throw InvalidArgument("log_se3: non-finite pose");
  const Eigen::Vector3d omega = log_so3(T.R);
  const double theta2 = omega.squaredNorm();
  double D;
  if (theta2 < kSmallAngle * kSmallAngle) {
    D = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    const double half = std::sin(0.5 * theta);
    // 1 - cos = 2 sin^2(theta / 2)
    D = (1.0 - theta * std::sin(theta) / (4.0 * half * half)) / theta2;
  }
  const Eigen::Matrix3d W = hat<double>(omega);
  const Eigen::Matrix3d Vinv = Eigen::Matrix3d::Identity() - 0.5 * W + D * (W * W);
  return {omega, Vinv * T.t};
}

double geodesic_so3(const Eigen::Matrix3d& RA, const Eigen::Matrix3d& RB) {
  const double c = 0.5 * ((RA.transpose() * RB).trace() - 1.0);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double geodesic_so3_log(const Eigen::Matrix3d& RA, const Eigen::Matrix3d& RB) {
  return log_so3(RA.transpose() * RB).norm();
}

double geodesic_log_se3(const Pose& TA, const Pose& TB) {
  return log_se3(inverse(TA) * TB).vector().norm();
}

double double_geodesic(const Pose& TA, const Pose& TB, double focal_length) {
  const double arc = 0.5 * focal_length * geodesic_so3(TA.R, TB.R);
  const double dt = (TA.t - TB.t).norm();
  return std::sqrt(arc * arc + dt * dt);
}

std::string to_string(ParamKind k) {
  switch (k) {
    case ParamKind::se3: return "se3";
    case ParamKind::axis_angle: return "axis_angle";
    case ParamKind::euler: return "euler";
    case ParamKind::quaternion: return "quaternion";
    case ParamKind::rotation6d: return "rotation6d";
  }
  return "unknown";
}

ParamKind parse_param_kind(std::string_view name) {
  for (ParamKind k : kAllParamKinds)
    if (to_string(k) == name) return k;
  if (name == "axis-angle") return ParamKind::axis_angle;
  throw InvalidArgument("unknown parameterization: " + std::string(name));
}

Pose param_to_pose(const PoseParam& p) {
  if (p.values.size() != param_dim(p.kind))
    throw InvalidArgument("param_to_pose: expected " + std::to_string(param_dim(p.kind)) +
                          " values for " + to_string(p.kind));
  if (!p.values.allFinite()) throw InvalidArgument("param_to_pose: non-finite parameters");
  const auto rt = decode_param<double>(p.kind, std::span<const double>(p.values.data(), p.values.size()));
  return {rt.R, rt.t};
}

PoseParam pose_to_param(const Pose& T, ParamKind kind) {
  PoseParam p{kind, Eigen::VectorXd::Zero(param_dim(kind))};
  const int rd = rotation_dim(kind);
  p.values.segment<3>(rd) = T.t;
  switch (kind) {
    case ParamKind::se3:
      p.values = log_se3(T).vector();
      break;
    case ParamKind::axis_angle:
      p.values.head<3>() = log_so3(T.R);
      break;
    case ParamKind::euler: {
      const auto& R = T.R;
      p.values[0] = std::atan2(R(1, 0), R(0, 0));
      p.values[1] = std::atan2(-R(2, 0), std::hypot(R(0, 0), R(1, 0)));
      p.values[2] = std::atan2(R(2, 1), R(2, 2));
      break;
    }
    case ParamKind::quaternion: {
      const Eigen::Matrix3d& R = T.R;
      // Shepperd's method: pivot on the largest of w, x, y, z.
      const std::array<double, 4> diag{R.trace(), R(0, 0), R(1, 1), R(2, 2)};
      const int k = static_cast<int>(std::max_element(diag.begin(), diag.end()) - diag.begin());
      double w, x, y, z;
      if (k == 0) {
        const double s = 2.0 * std::sqrt(1.0 + R.trace());
        w = 0.25 * s;
        x = (R(2, 1) - R(1, 2)) / s;
        y = (R(0, 2) - R(2, 0)) / s;
        z = (R(1, 0) - R(0, 1)) / s;
      } else if (k == 1) {
        const double s = 2.0 * std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2));
        w = (R(2, 1) - R(1, 2)) / s;
        x = 0.25 * s;
        y = (R(0, 1) + R(1, 0)) / s;
        z = (R(0, 2) + R(2, 0)) / s;
      } else if (k == 2) {
        const double s = 2.0 * std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2));
        w = (R(0, 2) - R(2, 0)) / s;
        x = (R(0, 1) + R(1, 0)) / s;
        y = 0.25 * s;
        z = (R(1, 2) + R(2, 1)) / s;
      } else {
        const double s = 2.0 * std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1));
        w = (R(1, 0) - R(0, 1)) / s;
        x = (R(0, 2) + R(2, 0)) / s;
        y = (R(1, 2) + R(2, 1)) / s;
        z = 0.25 * s;
      }
      Eigen::Vector4d q(w, x, y, z);
      q.normalize();
      if (q[0] < 0.0) q = -q;
      p.values.head<4>() = q;
      break;
    }
    case ParamKind::rotation6d:
      p.values.segment<3>(0) = T.R.col(0);
      p.values.segment<3>(3) = T.R.col(1);
      break;
  }
  return p;
}

Matrix6Xd param_jacobian(const PoseParam& p) {
  using J = Jet<kMaxParamDim>;
  const int dim = param_dim(p.kind);
  if (p.values.size() != dim) throw InvalidArgument("param_jacobian: wrong parameter count");
  std::array<J, kMaxParamDim> seeded;
  for (int k = 0; k < dim; ++k) seeded[k] = J::variable(p.values[k], k);
  const RigidT<J> rt = decode_param<J>(p.kind, std::span<const J>(seeded.data(), dim));

  Eigen::Matrix3d R;
  Eigen::Vector3d t;
  for (int r = 0; r < 3; ++r) {
    t[r] = rt.t[r].v;
    for (int c = 0; c < 3; ++c) R(r, c) = rt.R(r, c).v;
  }
  Matrix6Xd out(6, dim);
  for (int k = 0; k < dim; ++k) {
    Eigen::Matrix3d dR;
    Eigen::Vector3d dt;
    for (int r = 0; r < 3; ++r) {
      dt[r] = rt.t[r].d[k];
      for (int c = 0; c < 3; ++c) dR(r, c) = rt.R(r, c).d[k];
    }
    const Eigen::Vector3d w = vee(dR * R.transpose());
    out.col(k) << w, dt - w.cross(t);
  }
  return out;
}

}  // namespace diffreg
