#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "qscope/signal.hpp"
#include "qscope/trajectory.hpp"

namespace qscope {

/// Shortest round-trip-safe decimal text for a double ("inf"/"nan" spelled out).
std::string format_number(double v);

/// Tab-separated records: time, dq, survival, z0, p_0..p_{N−1}[, I_tau].
/// dq is the increment accumulated over each record interval. The first line
/// is "# " followed by the JSON header, the second names the columns.
void write_trajectory(std::ostream& os, const Trajectory& traj, const nlohmann::json& header,
                      const std::vector<double>* filtered = nullptr);

nlohmann::json to_json(const SnrEstimate& e);
void write_jsonl(std::ostream& os, const nlohmann::json& record);

/// Matrix with a self-describing header: row/column axis names and ranges.
void write_matrix(std::ostream& os, const Eigen::MatrixXd& m, const nlohmann::json& header);
/// Columns of equal length with named headers.
void write_columns(std::ostream& os, const std::vector<std::string>& names,
                   const std::vector<std::vector<double>>& columns, const nlohmann::json& header);

}  // namespace qscope
