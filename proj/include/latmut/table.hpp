#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace latmut {

// One named statistic; every row carries the replicate count and seed that
// produced it. Histogram cells are rows named like "k1_count_2".
struct StatRow {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
  long replicates = 0;
  std::uint64_t seed = 0;
};

struct ResultTable {
  std::vector<StatRow> rows;

  const StatRow* find(const std::string& name) const;
  double value_of(const std::string& name) const;
  void add(const std::string& name, double value, double std_error, long replicates,
           std::uint64_t seed);
};

// Stable column order, floats written with 17 significant digits,
// RFC-4180-style quoting.
std::string to_csv(const ResultTable& table);
std::string to_json(const ResultTable& table);
ResultTable table_from_json(const std::string& text);

void write_file(const std::string& path, const std::string& contents);

}  // namespace latmut
