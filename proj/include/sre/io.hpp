#pragma once

#include <string>

#include "sre/grid.hpp"

#include "json.hpp"

namespace sre {

/// Formats a double with 17 significant digits (lossless for binary64,
/// so written trajectories round-trip byte-identically).
std::string format_double(double x);

/// Writes a trajectory as CSV: header `t,m_0_0,...,m_{n-1}_{n-1}`
/// (row-major), one row per node. Blown-up paths emit only the nodes that
/// hold finite values.
void write_mat_path_csv(const std::string& file, const MatPath& path);

/// Reads a trajectory written by write_mat_path_csv.
MatPath read_mat_path_csv(const std::string& file);

/// Row-major flat JSON array of a matrix.
nlohmann::json mat_to_json(const Mat& m);

nlohmann::json to_json(const struct AssumptionIReport& rep);
nlohmann::json to_json(const struct AssumptionIIReport& rep);
nlohmann::json to_json(const struct IterationReport& rep);
nlohmann::json to_json(const struct SolveReport& rep);

} // namespace sre
