#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>

#include "diffreg/io.hpp"
#include "diffreg/phantom.hpp"
#include "diffreg/render.hpp"
#include "oracles.hpp"

using namespace diffreg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& s) const { return path / s; }
};

void write_bytes(const fs::path& p, std::size_t n) {
  std::ofstream out(p, std::ios::binary);
  const std::string zeros(n, '\0');
  out.write(zeros.data(), static_cast<std::streamsize>(n));
}

// 6-connected components of voxels above `level`.
int count_blobs(const Volume& v, double level) {
  std::vector<int> label(v.size(), 0);
  int n = 0;
  for (int k = 0; k < v.dims[2]; ++k)
    for (int j = 0; j < v.dims[1]; ++j)
      for (int i = 0; i < v.dims[0]; ++i) {
        if (v.at(i, j, k) <= level || label[v.index(i, j, k)]) continue;
        ++n;
        std::queue<std::array<int, 3>> q;
        q.push({i, j, k});
        label[v.index(i, j, k)] = n;
        while (!q.empty()) {
          const auto p = q.front();
          q.pop();
          for (int a = 0; a < 3; ++a)
            for (int s : {-1, 1}) {
              auto o = p;
              o[a] += s;
              if (o[a] < 0 || o[a] >= v.dims[a]) continue;
              const std::size_t id = v.index(o[0], o[1], o[2]);
              if (label[id] || v.data[id] <= level) continue;
              label[id] = n;
              q.push(o);
            }
        }
      }
  return n;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("volume files") {
  TempDir dir("diffreg_io_volume");
  std::ofstream(dir / "z.json") << R"({"dims": [2, 2, 2], "spacing": [1, 1, 1], "dtype": "f32"})";
  write_bytes(dir / "z.raw", 8 * 4);
  const Volume z = load_volume(dir / "z.raw", dir / "z.json");
  CHECK(z.size() == 8);
  for (double x : z.data) CHECK(x == 0.0);

  std::ofstream(dir / "short.json") << R"({"dims": [10, 10, 10], "spacing": [1, 1, 1]})";
  write_bytes(dir / "short.raw", 999 * 4);
  CHECK_THROWS_AS(load_volume(dir / "short.raw", dir / "short.json"), IoError);

  std::ofstream(dir / "bad.json") << R"({"dims": [2, 2, 2], "spacing": [1, 1, 1], "dtype": "i16"})";
  CHECK_THROWS_AS(load_volume(dir / "z.raw", dir / "bad.json"), IoError);
  std::ofstream(dir / "neg.json") << R"({"dims": [2, 2, 2], "spacing": [1, 0, 1]})";
  CHECK_THROWS_AS(load_volume(dir / "z.raw", dir / "neg.json"), InvalidArgument);

  std::mt19937_64 rng(61);
  Volume v = oracle::random_volume(rng, 7, Eigen::Vector3d(0.5, 1, 2));
  save_volume(v, dir / "v.raw", dir / "v.json", ScalarType::f64);
  const Volume back = load_volume(dir / "v.json");
  CHECK(back.data == v.data);
  CHECK(back.spacing == v.spacing);
  for (double& x : v.data) x = static_cast<float>(x);
  save_volume(v, dir / "f.raw", dir / "f.json");
  CHECK(load_volume(dir / "f.raw", dir / "f.json").data == v.data);

  std::ofstream(dir / "r.json")
      << R"({"dims": [2, 2, 2], "spacing": [1, 1, 1], "rescale_slope": 2, "rescale_intercept": -1})";
  const Volume r = load_volume(dir / "z.raw", dir / "r.json");
  for (double x : r.data) CHECK(x == 0.0);  // -1 clamps to zero
}

TEST_CASE("isocenter") {
  CHECK(isocenter_pose(Volume({100, 100, 100}, {1, 1, 1})).t == Eigen::Vector3d(50, 50, 50));
  const Pose p = isocenter_pose(Volume({512, 512, 256}, {0.5, 0.5, 1.0}));
  CHECK(p.t == Eigen::Vector3d(128, 128, 128));
  CHECK(p.R == Eigen::Matrix3d::Identity());
}

TEST_CASE("bone augmentation") {
  std::mt19937_64 rng(62);
  const Volume v = oracle::random_volume(rng, 10, {1, 1, 1});
  CHECK(bone_augment(v, 1.0).data == v.data);

  std::vector<double> hu(v.size(), 0.0);
  hu[17] = 400.0;
  const Volume b = bone_augment(v, 10.0, hu);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(b.data[i] == (i == 17 ? 10 * v.data[i] : v.data[i]));

  double last = 0;
  for (double c : {1.0, 2.0, 5.0, 10.0}) {
    const Volume a = bone_augment(v, c);
    double mean = 0;
    for (double x : a.data) mean += x;
    CHECK(mean >= last);
    last = mean;
  }
  CHECK_THROWS_AS(bone_augment(v, 0.5), InvalidArgument);
  CHECK_THROWS_AS(bone_augment(v, 2.0, std::vector<double>(3)), InvalidArgument);

  double lo = 1e9, hi = -1e9, sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double c = sample_bone_multiplier(rng);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
    sum += c;
  }
  CHECK(lo >= 1.0);
  CHECK(hi <= 10.0);
  CHECK(std::abs(sum / n - 5.5) < 0.05);
  std::mt19937_64 a(3), b2(3);
  CHECK(sample_bone_multiplier(a) == sample_bone_multiplier(b2));
}

TEST_CASE("image, pose and intrinsics files") {
  TempDir dir("diffreg_io_image");
  std::mt19937_64 rng(63);
  Image img = oracle::random_image(rng, 9, 11);
  save_image(img, dir / "a", ScalarType::f64);
  CHECK(load_image(dir / "a.json").pixels == img.pixels);
  CHECK(load_image(dir / "a").pixels == img.pixels);

  PatchSet p;
  p.patch_size = 3;
  p.centers = {{2, 2}, {6, 8}};
  img.mask = patch_mask(p, 9, 11);
  save_image(img, dir / "s", ScalarType::f64);
  const Image s = load_image(dir / "s");
  CHECK(s.mask == img.mask);
  write_pgm(img, dir / "s.pgm");
  CHECK(fs::file_size(dir / "s.pgm") > 99);
  CHECK_THROWS_AS(load_image(dir / "missing"), IoError);

  const Pose T = exp_se3(oracle::random_tangent(rng, 1.0, 100));
  write_pose(T, dir / "pose.json");
  CHECK((read_pose(dir / "pose.json").matrix() - T.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  std::ofstream(dir / "pose.txt") << "0 0 0 1 2 3\n";
  CHECK(read_pose(dir / "pose.txt").t == Eigen::Vector3d(1, 2, 3));
  std::ofstream(dir / "bad.txt") << "1 2 3\n";
  CHECK_THROWS_AS(read_pose(dir / "bad.txt"), IoError);

  const Intrinsics k{1000, 1000, 64, 64, 0.5, 0.5, 128, 128};
  write_intrinsics(k, dir / "k.json");
  const Intrinsics kb = read_intrinsics(dir / "k.json");
  CHECK(kb.matrix() == k.matrix());
  CHECK(kb.height == 128);
}

TEST_CASE("phantoms") {
  const Phantom cube = make_phantom({PhantomKind::cube, {64, 64, 64}, {1, 1, 1}, 0});
  CHECK(cube.volume.at(0, 0, 0) == doctest::Approx(0.02));
  CHECK(cube.volume.at(63, 10, 40) == doctest::Approx(0.02));
  CHECK(cube.volume.at(32, 32, 32) == doctest::Approx(0.04));
  CHECK(cube.volume.at(17, 17, 17) == doctest::Approx(0.04));
  CHECK(cube.volume.at(15, 32, 32) == doctest::Approx(0.02));
  CHECK(cube.landmarks.size() == 9);

  TempDir dir("diffreg_io_phantom");
  save_volume(cube.volume, dir / "c.raw", dir / "c.json");
  CHECK(fs::file_size(dir / "c.raw") == 64u * 64 * 64 * 4);
  const Volume back = load_volume(dir / "c.json");
  for (std::size_t i = 0; i < back.size(); ++i)
    CHECK(back.data[i] == static_cast<double>(static_cast<float>(cube.volume.data[i])));

  for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
    const Phantom s = make_phantom({PhantomKind::spheres, {64, 64, 64}, {2, 2, 2}, seed});
    CHECK(count_blobs(s.volume, 0.021) >= 3);
    CHECK(make_phantom({PhantomKind::spheres, {64, 64, 64}, {2, 2, 2}, seed}).volume.data == s.volume.data);
  }
  CHECK(make_phantom({PhantomKind::spheres, {32, 32, 32}, {2, 2, 2}, 0}).volume.data !=
        make_phantom({PhantomKind::spheres, {32, 32, 32}, {2, 2, 2}, 1}).volume.data);
  const Phantom hip = make_phantom({PhantomKind::hip, {48, 48, 48}, {2, 2, 2}, 0});
  CHECK(hip.volume.data.size() == 48u * 48 * 48);
  CHECK(parse_phantom_kind("hip-like") == PhantomKind::hip);
  CHECK_THROWS_AS(parse_phantom_kind("torus"), InvalidArgument);
}

TEST_CASE("cube phantom at the isocenter") {
  const Phantom cube = make_phantom({PhantomKind::cube, {32, 32, 32}, {2, 2, 2}, 0});
  const Detector d = make_detector(default_intrinsics(cube.volume, 32));
  const Image img = render(cube.volume, isocenter_pose(cube.volume), d);
  CHECK(img(16, 16) > 0.0);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(31, 31) == 0.0);
  CHECK(img(0, 31) == 0.0);
}

}
