#include "qscope/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "qscope/errors.hpp"

namespace qscope {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trajectory(std::ostream& os, const Trajectory& traj, const nlohmann::json& header,
                      const std::vector<double>* filtered) {
  os << "# " << header.dump() << '\n';
  os << "# time\tdq\tsurvival\tz0";
  for (int n = 0; n < traj.levels; ++n) os << "\tp_" << n;
  if (filtered) os << "\tI_tau";
  os << '\n';
  const std::size_t stride = static_cast<std::size_t>(traj.record_stride);
  for (std::size_t r = 0; r < traj.records(); ++r) {
    double dq = 0.0;
    if (r > 0 && !traj.dq.empty()) {
      for (std::size_t s = (r - 1) * stride; s < r * stride && s < traj.dq.size(); ++s)
        dq += traj.dq[s];
    }
    os << format_number(traj.times[r]) << '\t' << format_number(dq) << '\t'
       << format_number(traj.survival[r]) << '\t'
       << format_number(traj.focal_position.empty() ? 0.0 : traj.focal_position[r]);
    for (int n = 0; n < traj.levels; ++n) os << '\t' << format_number(traj.population(r, n));
    if (filtered) {
      double v = 0.0;
      if (r > 0 && r * stride - 1 < filtered->size()) v = (*filtered)[r * stride - 1];
      os << '\t' << format_number(v);
    }
    os << '\n';
  }
}

nlohmann::json to_json(const SnrEstimate& e) {
  nlohmann::json j;
  j["time"] = e.time;
  j["mean_signal"] = e.mean_signal;
  j["noise_var"] = e.noise_var;
  j["snr"] = e.snr;
  j["method"] = e.method;
  if (e.method == "ensemble") {
    j["sample_count"] = e.sample_count;
    j["snr_stderr"] = e.snr_stderr;
    j["mean_stderr"] = e.mean_stderr;
  }
  return j;
}

void write_jsonl(std::ostream& os, const nlohmann::json& record) { os << record.dump() << '\n'; }

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m, const nlohmann::json& header) {
  os << "# " << header.dump() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << '\t';
      os << format_number(m(i, j));
    }
    os << '\n';
  }
}

void write_columns(std::ostream& os, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns, const nlohmann::json& header) {
  if (names.size() != columns.size()) throw DimensionError("column names and data differ");
  os << "# " << header.dump() << '\n';
  os << "#";
  for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "\t" : " ") << names[c];
  os << '\n';
  std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) os << '\t';
      os << format_number(columns[c][r]);
    }
    os << '\n';
  }
}

}  // namespace qscope
