#include "teleop/harness/csv.hpp"

#include "teleop/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace teleop::harness {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) throw InvalidArgument("csv row width does not match header");
  rows.push_back(std::move(row));
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InvalidArgument("csv has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(column(name));
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw InvalidArgument("csv cell '" + cell + "' is not a number");
  return v;
}

namespace {

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\n\"") != std::string::npos)
      throw InvalidArgument("csv cell contains a separator: '" + cells[i] + "'");
    out << (i ? "," : "") << cells[i];
  }
  out << '\n';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  write_line(out, table.header);
  for (const auto& r : table.rows) write_line(out, r);
  for (const auto& [k, v] : table.summary) write_line(out, {k, v});
}

CsvTable read_csv(std::istream& in, const std::vector<std::string>& summary_keys) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("csv is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() == 2 && std::find(summary_keys.begin(), summary_keys.end(), cells[0]) != summary_keys.end()) {
      t.summary.emplace_back(cells[0], cells[1]);
      continue;
    }
    if (cells.size() != t.header.size()) throw InvalidArgument("csv row has " + std::to_string(cells.size()) +
                                                                 " cells, header has " +
                                                                 std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void save_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write csv", path);
  write_csv(out, table);
}

CsvTable load_csv(const std::string& path, const std::vector<std::string>& summary_keys) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open csv", path);
  return read_csv(in, summary_keys);
}

CsvTable cloud_table(const PointCloud& cloud) {
  CsvTable t;
  t.header = {"x", "y", "z"};
  for (const auto& p : cloud) t.add_row({format_double(p.x()), format_double(p.y()), format_double(p.z())});
  return t;
}

}  // namespace teleop::harness
