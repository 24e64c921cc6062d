// Minimal CSV reader/writer with `#` metadata comment lines.
#pragma once

#include <string>
#include <vector>

namespace ccpa::csvio {

struct Table {
  std::vector<std::string> comments;  // without leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Formats doubles with %.12g so emitted files are byte-stable across runs.
std::string fmt(double v);

void write(const std::string& path, const Table& table);
Table read(const std::string& path);

}  // namespace ccpa::csvio
