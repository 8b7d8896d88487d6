#include "georabi/result_table.hpp"

#include <cstdio>

#include "georabi/errors.hpp"

namespace georabi::experiment {

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw UsageError("ResultTable '" + name + "': row width does not match columns");
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string ResultTable::to_csv(const std::vector<std::string>& provenance) const {
  std::string out;
  for (const auto& line : provenance) out += "# " + line + "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ",";
    out += columns[c];
  }
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ",";
      out += format_double(row[c]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace georabi::experiment
