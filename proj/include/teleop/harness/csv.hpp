#pragma once

#include "teleop/geometry.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace teleop::harness {

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// Trailing `key,value` lines that follow the table (e.g. `auc,0.93`).
  std::vector<std::pair<std::string, std::string>> summary;

  void add_row(std::vector<std::string> row);
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

void write_csv(std::ostream& out, const CsvTable& table);
/// Inverse of write_csv when `summary_keys` names the trailing summary keys.
CsvTable read_csv(std::istream& in, const std::vector<std::string>& summary_keys = {});
void save_csv(const std::string& path, const CsvTable& table);
CsvTable load_csv(const std::string& path, const std::vector<std::string>& summary_keys = {});

CsvTable cloud_table(const PointCloud& cloud);

}  // namespace teleop::harness
