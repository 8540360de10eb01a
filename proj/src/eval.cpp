#include "diffreg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "diffreg/errors.hpp"

namespace diffreg {

void LandmarkSet::validate() const {
  if (points.cols() < 1) throw InvalidArgument("landmark set is empty");
  if (!points.allFinite()) throw InvalidArgument("landmarks must be finite");
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(points.cols()))
    throw InvalidArgument("landmark label count does not match points");
}

LandmarkSet read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open landmarks " + path.string());
  std::vector<Eigen::Vector3d> pts;
  LandmarkSet m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string label, field;
    std::getline(ss, label, ',');
    if (lineno == 1 && label == "label") continue;
    Eigen::Vector3d p;
    for (int k = 0; k < 3; ++k) {
      if (!std::getline(ss, field, ','))
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected label,x,y,z");
      try {
        p[k] = std::stod(field);
      } catch (const std::exception&) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
      }
    }
    m.labels.push_back(label);
    pts.push_back(p);
  }
  m.points.resize(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) m.points.col(k) = pts[k];
  m.validate();
  return m;
}

void write_landmarks(const LandmarkSet& m, const std::filesystem::path& path) {
  m.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << "label,x,y,z\n";
  for (int k = 0; k < m.size(); ++k) {
    const std::string label = m.labels.empty() ? "p" + std::to_string(k) : m.labels[k];
    out << label << ',' << m.points(0, k) << ',' << m.points(1, k) << ',' << m.points(2, k) << '\n';
  }
}

std::string to_string(MtreMode mode) {
  return mode == MtreMode::literal ? "literal" : "per_landmark_mean";
}

double mtre(const Eigen::Matrix3d& K, const Pose& E_true, const Pose& E_est, const LandmarkSet& M,
            MtreMode mode) {
  M.validate();
  Eigen::Matrix<double, 3, 4> D;
  D.leftCols<3>() = E_true.R - E_est.R;
  D.col(3) = E_true.t - E_est.t;
  const Eigen::Matrix3Xd diff = K * (D.leftCols<3>() * M.points + D.col(3).replicate(1, M.size()));
  const double m = static_cast<double>(M.size());
  if (mode == MtreMode::literal) return diff.norm() / m;
  return diff.colwise().norm().sum() / m;
}

double pose_mtre(const Pose& T_true, const Pose& T_est, const LandmarkSet& M, MtreMode mode) {
  return mtre(Eigen::Matrix3d::Identity(), inverse(T_true), inverse(T_est), M, mode);
}

SuccessSummary smsr(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) throw InvalidArgument("smsr: empty result list");
  SuccessSummary s;
  s.n = static_cast<int>(errors.size());
  s.threshold = threshold;
  const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return e < threshold; });
  s.rate = static_cast<double>(hits) / s.n;
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  s.median = s.n % 2 ? sorted[s.n / 2] : 0.5 * (sorted[s.n / 2 - 1] + sorted[s.n / 2]);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / s.n;
  if (s.n > 1) {
    double ss = 0;
    for (double e : sorted) ss += (e - s.mean) * (e - s.mean);
    s.std = std::sqrt(ss / (s.n - 1));
  }
  return s;
}

}  // namespace diffreg
