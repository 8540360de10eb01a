#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

#include "diffreg/errors.hpp"
#include "diffreg/eval.hpp"
#include "diffreg/geometry.hpp"
#include "diffreg/io.hpp"
#include "diffreg/lie.hpp"
#include "diffreg/phantom.hpp"
#include "diffreg/registration.hpp"
#include "diffreg/render.hpp"
#include "diffreg/similarity.hpp"
#include "diffreg/volume.hpp"

namespace py = pybind11;
using namespace diffreg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Mask = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Pose to_pose(const Eigen::Matrix4d& m) { return Pose::from_matrix(m, 1e-6); }

Tangent to_tangent(const Vector6d& v) { return {v.head<3>(), v.tail<3>()}; }

Vector6d from_tangent(const Tangent& t) {
  Vector6d v;
  v << t.omega, t.u;
  return v;
}

Image to_image(const Array& a, const std::optional<Mask>& mask) {
  if (a.ndim() != 2) throw InvalidArgument("images are 2-D arrays");
  Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  if (mask) {
    if (mask->size() != a.size()) throw InvalidArgument("mask shape differs from the image");
    img.mask.assign(mask->data(), mask->data() + mask->size());
  }
  return img;
}

Array pixels_of(const Image& img) {
  Array out({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

py::object mask_of(const Image& img) {
  if (!img.sparse()) return py::none();
  Mask out({img.height, img.width});
  std::copy(img.mask.begin(), img.mask.end(), out.mutable_data());
  return out;
}

Eigen::MatrixX3d landmark_rows(const LandmarkSet& m) { return m.points.transpose(); }

LandmarkSet to_landmarks(const Eigen::MatrixX3d& rows) {
  LandmarkSet m;
  m.points = rows.transpose();
  for (int i = 0; i < m.size(); ++i) m.labels.push_back("m" + std::to_string(i));
  m.validate();
  return m;
}

PatchSet to_patches(const std::vector<std::pair<int, int>>& centers, int patch_size) {
  PatchSet p;
  p.centers = centers;
  p.patch_size = patch_size;
  return p;
}

MetricConfig metric_config(const std::string& metric, int patch_size, int n_patches) {
  MetricConfig m;
  m.kind = parse_metric_kind(metric);
  m.patch_size = patch_size;
  m.scales = {patch_size, kFullImage};
  m.n_patches = n_patches;
  m.validate();
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Differentiable DRR rendering and 2D/3D rigid registration";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IllConditioned>(m, "IllConditioned", PyExc_ArithmeticError);
  py::register_exception<DegenerateInput>(m, "DegenerateInput", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("exp_se3", [](const Vector6d& v) { return exp_se3(to_tangent(v)).matrix(); },
        py::arg("v"), "(omega, u) -> 4x4 transform");
  m.def("log_se3", [](const Eigen::Matrix4d& T) { return from_tangent(log_se3(to_pose(T))); },
        py::arg("T"));
  m.def("exp_so3", &exp_so3, py::arg("omega"));
  m.def("log_so3", &log_so3, py::arg("R"));
  m.def("geodesic_so3", &geodesic_so3, py::arg("RA"), py::arg("RB"));
  m.def("geodesic_log_se3",
        [](const Eigen::Matrix4d& A, const Eigen::Matrix4d& B) {
          return geodesic_log_se3(to_pose(A), to_pose(B));
        },
        py::arg("TA"), py::arg("TB"));
  m.def("double_geodesic",
        [](const Eigen::Matrix4d& A, const Eigen::Matrix4d& B, double f) {
          return double_geodesic(to_pose(A), to_pose(B), f);
        },
        py::arg("TA"), py::arg("TB"), py::arg("focal_length"));
  m.def("param_kinds", [] {
    std::vector<std::string> out;
    for (ParamKind k : kAllParamKinds) out.push_back(to_string(k));
    return out;
  });

  py::class_<Volume>(m, "Volume")
      .def(py::init([](const Array& data, const Eigen::Vector3d& spacing,
                       const Eigen::Vector3d& origin) {
             if (data.ndim() != 3) throw InvalidArgument("volume data is a 3-D array (z, y, x)");
             Volume v({static_cast<int>(data.shape(2)), static_cast<int>(data.shape(1)),
                       static_cast<int>(data.shape(0))},
                      spacing);
             v.origin = origin;
             std::copy(data.data(), data.data() + data.size(), v.data.begin());
             return v;
           }),
           py::arg("data"), py::arg("spacing") = Eigen::Vector3d::Ones().eval(),
           py::arg("origin") = Eigen::Vector3d::Zero().eval())
      .def_property_readonly("dims", [](const Volume& v) { return v.dims; })
      .def_readonly("spacing", &Volume::spacing)
      .def_readonly("origin", &Volume::origin)
      .def_property_readonly("data", [](const Volume& v) {
        Array out({v.dims[2], v.dims[1], v.dims[0]});
        std::copy(v.data.begin(), v.data.end(), out.mutable_data());
        return out;
      });

  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, double dx, double dy, int h,
                       int w) {
             Intrinsics k{fx, fy, cx, cy, dx, dy, h, w};
             k.validate();
             return k;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("delta_x"),
           py::arg("delta_y"), py::arg("height"), py::arg("width"))
      .def_readonly("fx", &Intrinsics::fx)
      .def_readonly("fy", &Intrinsics::fy)
      .def_readonly("cx", &Intrinsics::cx)
      .def_readonly("cy", &Intrinsics::cy)
      .def_readonly("delta_x", &Intrinsics::delta_x)
      .def_readonly("delta_y", &Intrinsics::delta_y)
      .def_readonly("height", &Intrinsics::height)
      .def_readonly("width", &Intrinsics::width)
      .def("matrix", &Intrinsics::matrix);

  m.def("load_volume", [](const std::string& meta) { return load_volume(meta); }, py::arg("path"));
  m.def("save_volume",
        [](const Volume& v, const std::string& raw, const std::string& meta) {
          save_volume(v, raw, meta);
        },
        py::arg("volume"), py::arg("raw_path"), py::arg("meta_path"));
  m.def("read_intrinsics", [](const std::string& p) { return read_intrinsics(p); });

  m.def("make_phantom",
        [](const std::string& kind, std::array<int, 3> dims, const Eigen::Vector3d& spacing,
           std::uint64_t seed) {
          PhantomConfig c;
          c.kind = parse_phantom_kind(kind);
          c.dims = dims;
          c.spacing = spacing;
          c.seed = seed;
          Phantom p = make_phantom(c);
          return py::make_tuple(std::move(p.volume), landmark_rows(p.landmarks));
        },
        py::arg("kind") = "spheres", py::arg("dims") = std::array<int, 3>{64, 64, 64},
        py::arg("spacing") = Eigen::Vector3d(2, 2, 2), py::arg("seed") = 0,
        "Returns (volume, landmarks as an n x 3 array).");
  m.def("default_intrinsics", &default_intrinsics, py::arg("volume"), py::arg("pixels") = 128,
        py::arg("focal_length") = 1000.0);
  m.def("isocenter_pose", [](const Volume& v) { return isocenter_pose(v).matrix(); });

  m.def("render",
        [](const Volume& v, const Eigen::Matrix4d& pose, const Intrinsics& k,
           std::optional<std::vector<std::pair<int, int>>> centers, int patch_size, int threads) {
          std::optional<PatchSet> patches;
          if (centers) patches = to_patches(*centers, patch_size);
          Image img;
          {
            py::gil_scoped_release release;
            img = render(v, to_pose(pose), make_detector(k), patches, {threads});
          }
          if (!patches) return py::object(pixels_of(img));
          return py::object(py::make_tuple(pixels_of(img), mask_of(img)));
        },
        py::arg("volume"), py::arg("pose"), py::arg("intrinsics"), py::arg("centers") = py::none(),
        py::arg("patch_size") = 13, py::arg("threads") = 1,
        "Dense image, or (image, mask) when patch centers are given.");
  m.def("render_with_jacobian",
        [](const Volume& v, const Eigen::Matrix4d& pose, const Intrinsics& k, int threads) {
          RenderJacobian rj;
          {
            py::gil_scoped_release release;
            rj = render_with_jacobian(v, to_pose(pose), make_detector(k), std::nullopt, {threads});
          }
          Array g({rj.image.height, rj.image.width, 6});
          std::copy(rj.gradients.data(), rj.gradients.data() + rj.gradients.size(),
                    g.mutable_data());
          return py::make_tuple(pixels_of(rj.image), g);
        },
        py::arg("volume"), py::arg("pose"), py::arg("intrinsics"), py::arg("threads") = 1,
        "Returns (image, d image / d (omega, u)) with shape (H, W, 6).");

  m.def("sample_patch_centers",
        [](int h, int w, int n, int patch_size, std::uint64_t seed) {
          std::mt19937_64 rng(seed);
          return sample_patch_centers(h, w, n, patch_size, rng).centers;
        },
        py::arg("height"), py::arg("width"), py::arg("n"), py::arg("patch_size") = 13,
        py::arg("seed") = 0);
  m.def("ncc", [](const Array& a, const Array& b) {
    return ncc(to_image(a, std::nullopt), to_image(b, std::nullopt));
  });
  m.def("local_ncc",
        [](const Array& a, const Array& b, int p) {
          return local_ncc(to_image(a, std::nullopt), to_image(b, std::nullopt), p);
        },
        py::arg("a"), py::arg("b"), py::arg("patch_size") = 13);
  m.def("mncc",
        [](const Array& a, const Array& b, std::vector<int> scales) {
          return mncc(to_image(a, std::nullopt), to_image(b, std::nullopt), scales);
        },
        py::arg("a"), py::arg("b"), py::arg("scales") = std::vector<int>{13, kFullImage});
  m.def("sparse_mncc",
        [](const Array& fixed, const Array& moving, const std::vector<std::pair<int, int>>& c,
           int p, std::optional<Mask> mask) {
          return sparse_mncc(to_image(fixed, std::nullopt), to_image(moving, mask),
                             to_patches(c, p));
        },
        py::arg("fixed"), py::arg("moving"), py::arg("centers"), py::arg("patch_size") = 13,
        py::arg("moving_mask") = py::none());
  m.def("mse", [](const Array& a, const Array& b) {
    return mse(to_image(a, std::nullopt), to_image(b, std::nullopt));
  });
  m.attr("FULL_IMAGE") = kFullImage;

  m.def("mtre",
        [](const Eigen::Matrix4d& T_true, const Eigen::Matrix4d& T_est,
           const Eigen::MatrixX3d& landmarks, const std::string& mode) {
          const MtreMode md = mode == "literal" ? MtreMode::literal
                              : mode == "per_landmark_mean"
                                  ? MtreMode::per_landmark_mean
                                  : throw InvalidArgument("unknown mTRE mode: " + mode);
          return pose_mtre(to_pose(T_true), to_pose(T_est), to_landmarks(landmarks), md);
        },
        py::arg("T_true"), py::arg("T_est"), py::arg("landmarks"), py::arg("mode") = "literal");

  m.def("register",
        [](const Array& fixed, const Volume& v, const Intrinsics& k, const Eigen::Matrix4d& init,
           const std::string& param, const std::string& metric, int iters, bool early_stop,
           double lr_rot, double lr_trans, int n_patches, int patch_size, std::uint64_t seed,
           int threads) {
          OptimConfig o;
          o.param_kind = parse_param_kind(param);
          o.max_iters = iters;
          o.early_stop = early_stop;
          o.lr_rot = lr_rot;
          o.lr_trans = lr_trans;
          o.threads = threads;
          o.validate();
          const MetricConfig mc = metric_config(metric, patch_size, n_patches);
          const Image f = to_image(fixed, std::nullopt);
          std::mt19937_64 rng(seed);
          RegistrationResult r;
          {
            py::gil_scoped_release release;
            r = register_pose(f, v, make_detector(k), to_pose(init), o, mc, rng);
          }
          py::list sims;
          for (const auto& rec : r.trajectory.records) sims.append(rec.similarity);
          py::dict out;
          out["pose"] = r.pose.matrix();
          out["similarity"] = r.similarity;
          out["best_iter"] = r.best_iter;
          out["iterations"] = r.iterations;
          out["stop_reason"] = r.stop_reason;
          out["similarities"] = sims;
          return out;
        },
        py::arg("fixed"), py::arg("volume"), py::arg("intrinsics"), py::arg("init"),
        py::arg("param") = "se3", py::arg("metric") = "sparse_mncc", py::arg("iters") = 250,
        py::arg("early_stop") = true, py::arg("lr_rot") = 7.5e-3, py::arg("lr_trans") = 7.5,
        py::arg("n_patches") = 100, py::arg("patch_size") = 13, py::arg("seed") = 0,
        py::arg("threads") = 1);
}
