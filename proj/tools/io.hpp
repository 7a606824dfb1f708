#pragma once

#include "nhocp/trajectory.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace nhocp::cli {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
/// Strict parse of a whole field; throws std::invalid_argument.
double parse_double(const std::string& s);

/// RFC-4180 table; every row has header.size() cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  ///< -1 when absent
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Columns t, q1..qn, y1..yk, then pb1..pbn, pf1..pfk for extremals and
/// u1..uk when controls are present.
CsvTable trajectory_table(const Trajectory& traj);
/// Inverse of trajectory_table.
Trajectory trajectory_from_table(const CsvTable& table, int n, int k);

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);
nlohmann::ordered_json read_json(const std::filesystem::path& path);

}  // namespace nhocp::cli
