#include <doctest.h>

#include <numbers>

#include "diffreg/lie.hpp"
#include "oracles.hpp"

using namespace diffreg;

TEST_SUITE("lie") {

TEST_CASE("exp_se3 matches the matrix exponential series") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const Tangent v = oracle::random_tangent(rng, 3.0, 50.0);
    const Eigen::Matrix4d ref = oracle::expm(oracle::twist(v));
    CHECK((exp_se3(v).matrix() - ref).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("exp_se3 near zero uses the series branch smoothly") {
  for (double s : {0.0, 1e-12, 1e-9, 1e-7, 1e-6, 2e-6, 1e-4}) {
    Tangent v;
    v.omega = Eigen::Vector3d(0.3, -0.5, 0.8).normalized() * s;
    v.u = Eigen::Vector3d(1, 2, 3);
    const Eigen::Matrix4d ref = oracle::expm(oracle::twist(v));
    CHECK((exp_se3(v).matrix() - ref).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((log_se3(exp_se3(v)).vector() - v.vector()).norm() < 1e-12);
  }
}

TEST_CASE("log inverts exp away from pi") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const Tangent v = oracle::random_tangent(rng, std::numbers::pi - 1e-3, 100.0);
    const Tangent back = log_se3(exp_se3(v));
    CHECK((back.vector() - v.vector()).norm() < 1e-9);
  }
}

TEST_CASE("log_so3 near pi recovers the axis") {
  const Eigen::Vector3d axis = Eigen::Vector3d(1, 2, -2).normalized();
  const double theta = std::numbers::pi - 1e-5;
  const Eigen::Vector3d w = log_so3(exp_so3(theta * axis));
  CHECK((w - theta * axis).norm() < 1e-6);
  CHECK_THROWS_AS(log_so3(exp_so3((std::numbers::pi - 1e-8) * axis)), IllConditioned);
}

TEST_CASE("exp of a pure rotation and a pure translation") {
  Tangent v;
  v.omega = {0, 0, std::numbers::pi / 2};
  const Pose T = exp_se3(v);
  CHECK((T * Eigen::Vector3d(1, 0, 0) - Eigen::Vector3d(0, 1, 0)).norm() < 1e-15);
  v = {};
  v.u = {1, 2, 3};
  CHECK((exp_se3(v).t - v.u).norm() == 0.0);
}

TEST_CASE("pose algebra") {
  std::mt19937_64 rng(3);
  const Pose A = exp_se3(oracle::random_tangent(rng, 2.0, 30.0));
  const Pose B = exp_se3(oracle::random_tangent(rng, 2.0, 30.0));
  CHECK(((A * B).matrix() - A.matrix() * B.matrix()).norm() < 1e-12);
  CHECK(((A * inverse(A)).matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
  CHECK(A.is_valid());
  Eigen::Matrix4d bad = A.matrix();
  bad(0, 0) += 1e-3;
  CHECK_THROWS_AS(Pose::from_matrix(bad), InvalidArgument);
  Eigen::MatrixX3d pts(2, 3);
  pts << 1, 2, 3, -4, 5, 6;
  const Eigen::MatrixX3d out = transform_points(A, pts);
  CHECK((out.row(1).transpose() - A * Eigen::Vector3d(-4, 5, 6)).norm() < 1e-12);
}

TEST_CASE("both so3 geodesic forms agree") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Matrix3d A = exp_so3(oracle::random_tangent(rng, 3.0, 0).omega);
    const Eigen::Matrix3d B = exp_so3(oracle::random_tangent(rng, 3.0, 0).omega);
    double d_log = 0;
    try {
      d_log = geodesic_so3_log(A, B);
    } catch (const IllConditioned&) {
      continue;
    }
    CHECK(std::abs(geodesic_so3(A, B) - d_log) < 1e-9);
  }
}

TEST_CASE("double geodesic closed forms") {
  const double f = 1020.0;
  Tangent v;
  v.u = {3, 4, 0};
  CHECK(double_geodesic(Pose{}, exp_se3(v), f) == 5.0);
  v = {};
  v.omega = {0, 0.1, 0};
  CHECK(double_geodesic(Pose{}, exp_se3(v), f) == doctest::Approx(51.0).epsilon(1e-14));
  // Rotation by 0.1 rad with a 3-4-5 translation: sqrt(51^2 + 5^2).
  Pose T = exp_se3(v);
  T.t = {0, 3, 4};
  CHECK(double_geodesic(Pose{}, T, f) == doctest::Approx(std::sqrt(51.0 * 51.0 + 25.0)));
  CHECK(double_geodesic(T, T, f) == 0.0);
}

TEST_CASE("geodesic_log_se3 of exp(v) is |v|") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Tangent v = oracle::random_tangent(rng, 2.5, 20.0);
    CHECK(geodesic_log_se3(Pose{}, exp_se3(v)) == doctest::Approx(v.vector().norm()));
  }
}

TEST_CASE("parameterizations round-trip") {
  std::mt19937_64 rng(6);
  for (ParamKind k : kAllParamKinds) {
    for (int i = 0; i < 50; ++i) {
      const Pose T = exp_se3(oracle::random_tangent(rng, 1.3, 50.0));
      const PoseParam p = pose_to_param(T, k);
      CHECK(p.values.size() == param_dim(k));
      const Pose back = param_to_pose(p);
      CHECK((back.matrix() - T.matrix()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  CHECK(parse_param_kind("axis-angle") == ParamKind::axis_angle);
  CHECK_THROWS_AS(parse_param_kind("nope"), InvalidArgument);
}

TEST_CASE("param_jacobian matches finite differences of the left perturbation") {
  std::mt19937_64 rng(7);
  for (ParamKind k : kAllParamKinds) {
    const Pose T = exp_se3(oracle::random_tangent(rng, 1.0, 40.0));
    const PoseParam p = pose_to_param(T, k);
    const Matrix6Xd J = param_jacobian(p);
    REQUIRE(J.cols() == param_dim(k));
    const Pose T0 = param_to_pose(p);
    for (int c = 0; c < J.cols(); ++c) {
      const double h = 1e-6;
      PoseParam pp = p, pm = p;
      pp.values[c] += h;
      pm.values[c] -= h;
      const Vector6d fd = (log_se3(param_to_pose(pp) * inverse(T0)).vector() -
                           log_se3(param_to_pose(pm) * inverse(T0)).vector()) /
                          (2 * h);
      CHECK((fd - J.col(c)).norm() < 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("jets carry derivatives") {
  using J2 = Jet<2>;
  const J2 x = J2::variable(0.7, 0), y = J2::variable(-1.3, 1);
  const J2 f = sin(x * y) + sqrt(x * x + y * y) / (x + 3.0);
  const auto g = [](double a, double b) {
    return std::sin(a * b) + std::sqrt(a * a + b * b) / (a + 3.0);
  };
  const double h = 1e-6;
  CHECK(f.v == g(0.7, -1.3));
  CHECK(f.d[0] == doctest::Approx((g(0.7 + h, -1.3) - g(0.7 - h, -1.3)) / (2 * h)).epsilon(1e-8));
  CHECK(f.d[1] == doctest::Approx((g(0.7, -1.3 + h) - g(0.7, -1.3 - h)) / (2 * h)).epsilon(1e-8));
}

TEST_CASE("non-finite input is rejected") {
  Tangent v;
  v.u.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(log_se3(exp_se3(v)), InvalidArgument);
}

}
