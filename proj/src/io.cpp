#include "diffreg/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "diffreg/errors.hpp"

namespace diffreg {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

namespace {

static_assert(std::endian::native == std::endian::little, "image files are little-endian");

fs::path sidecar_of(const fs::path& path) {
  if (path.extension() == ".json") return path;
  fs::path p = path;
  p += ".json";
  return p;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

fs::path save_image(const Image& img, const fs::path& stem, ScalarType dtype) {
  fs::path raw = stem, meta = stem, mask = stem;
  raw += ".raw";
  meta += ".json";
  mask += ".mask.raw";
  {
    std::ofstream out(raw, std::ios::binary);
    if (!out) throw IoError("cannot write " + raw.string());
    for (double x : img.pixels) {
      if (dtype == ScalarType::f32) {
        const float f = static_cast<float>(x);
        out.write(reinterpret_cast<const char*>(&f), sizeof f);
      } else {
        out.write(reinterpret_cast<const char*>(&x), sizeof x);
      }
    }
    if (!out) throw IoError("short write to " + raw.string());
  }
  json j;
  j["height"] = img.height;
  j["width"] = img.width;
  j["dtype"] = to_string(dtype);
  j["byte_order"] = "little";
  j["data_file"] = raw.filename().string();
  j["units"] = "absorption";
  if (img.sparse()) {
    std::ofstream out(mask, std::ios::binary);
    if (!out) throw IoError("cannot write " + mask.string());
    out.write(reinterpret_cast<const char*>(img.mask.data()),
              static_cast<std::streamsize>(img.mask.size()));
    j["mask_file"] = mask.filename().string();
    j["rendered_pixels"] = std::count(img.mask.begin(), img.mask.end(), 1);
  }
  write_json_file(j, meta);
  return meta;
}

Image load_image(const fs::path& path) {
  const fs::path meta = sidecar_of(path);
  const json j = read_json_file(meta);
  Image img;
  std::string data_file, mask_file;
  ScalarType dtype;
  try {
    img = Image(j.at("height").get<int>(), j.at("width").get<int>());
    dtype = parse_scalar_type(j.value("dtype", std::string("f32")));
    if (j.value("byte_order", std::string("little")) != "little")
      throw IoError("image files must be little-endian");
    data_file = j.at("data_file").get<std::string>();
    mask_file = j.value("mask_file", std::string());
  } catch (const json::exception& e) {
    throw IoError("image metadata " + meta.string() + ": " + e.what());
  }
  const fs::path dir = meta.parent_path();
  const std::string bytes = read_bytes(dir / data_file);
  const std::size_t elem = dtype == ScalarType::f32 ? 4 : 8;
  if (bytes.size() != img.size() * elem)
    throw IoError("image length mismatch in " + (dir / data_file).string());
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (dtype == ScalarType::f32) {
      float f;
      std::memcpy(&f, bytes.data() + i * 4, 4);
      img.pixels[i] = f;
    } else {
      std::memcpy(&img.pixels[i], bytes.data() + i * 8, 8);
    }
  }
  if (!mask_file.empty()) {
    const std::string m = read_bytes(dir / mask_file);
    if (m.size() != img.size()) throw IoError("mask length mismatch in " + mask_file);
    img.mask.assign(m.begin(), m.end());
  }
  return img;
}

void write_pgm(const Image& img, const fs::path& path) {
  double lo = 0, hi = 0;
  bool first = true;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!img.defined(i)) continue;
    lo = first ? img.pixels[i] : std::min(lo, img.pixels[i]);
    hi = first ? img.pixels[i] : std::max(hi, img.pixels[i]);
    first = false;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double g = img.defined(i) ? (img.pixels[i] - lo) * scale : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(g + 0.5, 0.0, 255.0))));
  }
}

json pose_to_json(const Pose& pose) {
  const Eigen::Matrix4d m = pose.matrix();
  json rows = json::array();
  for (int r = 0; r < 4; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
  json j;
  j["matrix"] = rows;
  try {
    const Vector6d v = log_se3(pose).vector();
    j["se3"] = std::vector<double>(v.data(), v.data() + 6);
  } catch (const IllConditioned&) {
  }
  return j;
}

Pose pose_from_json(const json& j) {
  try {
    if (j.contains("matrix")) {
      Eigen::Matrix4d m;
      const auto& rows = j.at("matrix");
      if (rows.size() != 4) throw IoError("pose matrix must have 4 rows");
      for (int r = 0; r < 4; ++r) {
        if (rows[r].size() != 4) throw IoError("pose matrix rows must have 4 entries");
        for (int c = 0; c < 4; ++c) m(r, c) = rows[r][c].get<double>();
      }
      return Pose::from_matrix(m, 1e-6);
    }
    if (j.contains("se3")) {
      const auto v = j.at("se3").get<std::vector<double>>();
      if (v.size() != 6) throw IoError("se3 pose must have 6 entries");
      return exp_se3(Tangent::from_vector(Vector6d(v.data())));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("pose record: ") + e.what());
  }
  throw IoError("pose record needs a 'matrix' or 'se3' entry");
}

Pose read_pose(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return pose_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw IoError("malformed pose JSON in " + path.string() + ": " + e.what());
    }
  }
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::stringstream ss(cleaned);
  std::vector<double> v;
  for (double x; ss >> x;) v.push_back(x);
  if (!ss.eof()) throw IoError("pose file " + path.string() + " contains non-numeric text");
  if (v.size() == 16) {
    Eigen::Matrix4d m;
    for (int k = 0; k < 16; ++k) m(k / 4, k % 4) = v[k];
    return Pose::from_matrix(m, 1e-6);
  }
  if (v.size() == 6) return exp_se3(Tangent::from_vector(Vector6d(v.data())));
  throw IoError("pose file " + path.string() + " must hold 16 or 6 numbers");
}

void write_pose(const Pose& pose, const fs::path& path) { write_json_file(pose_to_json(pose), path); }

Intrinsics read_intrinsics(const fs::path& path) {
  const json j = read_json_file(path);
  Intrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.delta_x = j.at("delta_x").get<double>();
    k.delta_y = j.at("delta_y").get<double>();
    k.height = j.at("height").get<int>();
    k.width = j.at("width").get<int>();
  } catch (const json::exception& e) {
    throw IoError("intrinsics " + path.string() + ": " + e.what());
  }
  k.validate();
  return k;
}

void write_intrinsics(const Intrinsics& k, const fs::path& path) {
  json j;
  j["fx"] = k.fx;
  j["fy"] = k.fy;
  j["cx"] = k.cx;
  j["cy"] = k.cy;
  j["delta_x"] = k.delta_x;
  j["delta_y"] = k.delta_y;
  j["height"] = k.height;
  j["width"] = k.width;
  write_json_file(j, path);
}

}  // namespace diffreg
