#include "ccpa/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccpa::csvio {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& c : table.comments) out << "# " << c << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << table.header[i] << (i + 1 < table.header.size() ? "," : "\n");
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "");
    out << "\n";
  }
}

static std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Table read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  Table t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t start = line.find_first_not_of("# ");
      t.comments.push_back(start == std::string::npos ? "" : line.substr(start));
      continue;
    }
    if (!have_header) {
      t.header = split(line);
      have_header = true;
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

}  // namespace ccpa::csvio
