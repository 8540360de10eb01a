#include "diffreg/volume.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "diffreg/errors.hpp"
#include "diffreg/log.hpp"

namespace diffreg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ScalarType t) { return t == ScalarType::f32 ? "f32" : "f64"; }

ScalarType parse_scalar_type(const std::string& s) {
  if (s == "f32" || s == "float32") return ScalarType::f32;
  if (s == "f64" || s == "float64") return ScalarType::f64;
  throw IoError("unknown scalar type: " + s);
}

Volume::Volume(std::array<int, 3> d, const Eigen::Vector3d& s, double fill)
    : dims(d), spacing(s) {
  if (d[0] < 1 || d[1] < 1 || d[2] < 1) throw InvalidArgument("volume dims must be >= 1");
  data.assign(static_cast<std::size_t>(d[0]) * d[1] * d[2], fill);
}

Eigen::Vector3d Volume::extent() const {
  return {dims[0] * spacing.x(), dims[1] * spacing.y(), dims[2] * spacing.z()};
}

Eigen::Vector3d Volume::voxel_center(int i, int j, int k) const {
  return origin + Eigen::Vector3d((i + 0.5) * spacing.x(), (j + 0.5) * spacing.y(),
                                  (k + 0.5) * spacing.z());
}

void Volume::validate(bool require_nonnegative) const {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw InvalidArgument("volume dims must be >= 1");
  if (!(spacing.minCoeff() > 0)) throw InvalidArgument("volume spacing must be positive");
  if (data.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])
    throw InvalidArgument("volume data size does not match dims");
  for (double x : data) {
    if (!std::isfinite(x)) throw InvalidArgument("volume contains non-finite values");
    if (require_nonnegative && x < 0) throw InvalidArgument("volume contains negative attenuation");
  }
}

namespace {

template <class T>
T byteswap_value(T x) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &x, sizeof(T));
  std::reverse(b, b + sizeof(T));
  std::memcpy(&x, b, sizeof(T));
  return x;
}

bool host_matches(const std::string& byte_order) {
  if (byte_order != "little" && byte_order != "big")
    throw IoError("unknown byte order: " + byte_order);
  return (byte_order == "little") == (std::endian::native == std::endian::little);
}

template <class T>
std::vector<double> decode_raw(const std::string& bytes, bool swap) {
  const std::size_t n = bytes.size() / sizeof(T);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    T x;
    std::memcpy(&x, bytes.data() + i * sizeof(T), sizeof(T));
    out[i] = static_cast<double>(swap ? byteswap_value(x) : x);
  }
  return out;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

}  // namespace

VolumeMetadata read_volume_metadata(const fs::path& meta_path) {
  const json j = read_json(meta_path);
  VolumeMetadata m;
  try {
    m.dims = j.at("dims").get<std::array<int, 3>>();
    const auto sp = j.at("spacing").get<std::array<double, 3>>();
    m.spacing = {sp[0], sp[1], sp[2]};
    if (j.contains("origin")) {
      const auto o = j["origin"].get<std::array<double, 3>>();
      m.origin = {o[0], o[1], o[2]};
    }
    m.dtype = parse_scalar_type(j.value("dtype", std::string("f32")));
    m.byte_order = j.value("byte_order", std::string("little"));
    m.rescale_slope = j.value("rescale_slope", 1.0);
    m.rescale_intercept = j.value("rescale_intercept", 0.0);
    m.data_file = j.value("data_file", std::string());
  } catch (const json::exception& e) {
    throw IoError("volume metadata " + meta_path.string() + ": " + e.what());
  }
  if (m.dims[0] < 1 || m.dims[1] < 1 || m.dims[2] < 1) throw IoError("volume metadata: dims must be >= 1");
  if (!(m.spacing.minCoeff() > 0)) throw InvalidArgument("volume metadata: spacing must be positive");
  return m;
}

Volume load_volume(const fs::path& raw_path, const fs::path& meta_path) {
  const VolumeMetadata m = read_volume_metadata(meta_path);
  const std::string bytes = read_bytes(raw_path);
  const std::size_t n = static_cast<std::size_t>(m.dims[0]) * m.dims[1] * m.dims[2];
  const std::size_t elem = m.dtype == ScalarType::f32 ? 4 : 8;
  if (bytes.size() != n * elem)
    throw IoError("volume length mismatch: expected " + std::to_string(n * elem) + " bytes, file " +
                  raw_path.string() + " has " + std::to_string(bytes.size()));
  const bool swap = !host_matches(m.byte_order);

  Volume v;
  v.dims = m.dims;
  v.spacing = m.spacing;
  v.origin = m.origin;
  v.data = m.dtype == ScalarType::f32 ? decode_raw<float>(bytes, swap) : decode_raw<double>(bytes, swap);
  for (double x : v.data)
    if (!std::isfinite(x)) throw IoError("volume contains non-finite values");
  if (m.rescale_slope != 1.0 || m.rescale_intercept != 0.0)
    rescale_attenuation(v, m.rescale_slope, m.rescale_intercept);
  else if (std::any_of(v.data.begin(), v.data.end(), [](double x) { return x < 0; }))
    rescale_attenuation(v, 1.0, 0.0);
  return v;
}

Volume load_volume(const fs::path& meta_path) {
  const VolumeMetadata m = read_volume_metadata(meta_path);
  fs::path raw = m.data_file;
  if (raw.empty()) {
    raw = meta_path;
    raw.replace_extension(".raw");
  } else if (raw.is_relative()) {
    raw = meta_path.parent_path() / raw;
  }
  return load_volume(raw, meta_path);
}

void save_volume(const Volume& v, const fs::path& raw_path, const fs::path& meta_path,
                 ScalarType dtype) {
  v.validate(false);
  {
    std::ofstream out(raw_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + raw_path.string());
    const bool swap = std::endian::native != std::endian::little;
    for (double x : v.data) {
      if (dtype == ScalarType::f32) {
        float f = static_cast<float>(x);
        if (swap) f = byteswap_value(f);
        out.write(reinterpret_cast<const char*>(&f), sizeof f);
      } else {
        double d = swap ? byteswap_value(x) : x;
        out.write(reinterpret_cast<const char*>(&d), sizeof d);
      }
    }
    if (!out) throw IoError("short write to " + raw_path.string());
  }
  const fs::path meta_dir = meta_path.parent_path().empty() ? fs::path(".") : meta_path.parent_path();
  const fs::path raw_dir = raw_path.parent_path().empty() ? fs::path(".") : raw_path.parent_path();
  std::string data_file = raw_path.filename().string();
  if (fs::weakly_canonical(meta_dir) != fs::weakly_canonical(raw_dir))
    data_file = fs::absolute(raw_path).string();

  json j;
  j["dims"] = v.dims;
  j["spacing"] = {v.spacing.x(), v.spacing.y(), v.spacing.z()};
  j["origin"] = {v.origin.x(), v.origin.y(), v.origin.z()};
  j["dtype"] = to_string(dtype);
  j["byte_order"] = "little";
  j["units"] = "mm^-1";
  j["data_file"] = data_file;
  std::ofstream out(meta_path);
  if (!out) throw IoError("cannot write " + meta_path.string());
  out << j.dump(2) << '\n';
}

std::size_t rescale_attenuation(Volume& v, double slope, double intercept) {
  std::size_t clamped = 0;
  for (double& x : v.data) {
    x = slope * x + intercept;
    if (x < 0) {
      x = 0;
      ++clamped;
    }
  }
  if (clamped)
    log_warning("clamped " + std::to_string(clamped) + " negative attenuation voxels to 0");
  return clamped;
}

Pose isocenter_pose(const Volume& v) { return Pose::translation(0.5 * v.extent()); }

Volume bone_augment(const Volume& v, double multiplier, const std::vector<double>& hu,
                    double threshold_hu) {
  if (!(multiplier >= 1.0)) throw InvalidArgument("bone multiplier must be >= 1");
  if (hu.size() != v.data.size()) throw InvalidArgument("HU grid does not match volume dims");
  Volume out = v;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    if (hu[i] > threshold_hu) out.data[i] *= multiplier;
  return out;
}

Volume bone_augment(const Volume& v, double multiplier) {
  if (!(multiplier >= 1.0)) throw InvalidArgument("bone multiplier must be >= 1");
  std::vector<double> sorted = v.data;
  const std::size_t rank = static_cast<std::size_t>(kBonePercentile * (sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + rank, sorted.end());
  const double cut = sorted[rank];
  Volume out = v;
  for (double& x : out.data)
    if (x > cut) x *= multiplier;
  return out;
}

double sample_bone_multiplier(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(1.0, 10.0)(rng);
}

}  // namespace diffreg
