#pragma once

#include <string>
#include <vector>

namespace georabi::experiment {

// Named columns of reals; complex quantities appear as _re/_im column pairs.
struct ResultTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  // '#'-prefixed provenance lines followed by a header row and the data.
  std::string to_csv(const std::vector<std::string>& provenance) const;
};

std::string format_double(double v);

}  // namespace georabi::experiment
