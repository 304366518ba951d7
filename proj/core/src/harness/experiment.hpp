#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cwsc/harness.hpp"

namespace cwsc::harness::detail {

/// One unit of work. For Monte Carlo experiments replica is the replica
/// index; deterministic experiments use it as a sub-case index.
struct Cell {
  std::size_t n = 0;
  long long replica = 0;
  std::uint64_t seed = 0;
};

struct Summary {
  std::vector<Row> rows;
  /// Extra output files as (name, contents).
  std::vector<std::pair<std::string, std::string>> files;
};

class Experiment {
 public:
  virtual ~Experiment() = default;
  virtual std::vector<Cell> cells() const = 0;
  /// Rows of one cell; a pure function of the config and the cell.
  virtual std::vector<Row> compute(const Cell& cell) const = 0;
  /// Aggregates from the rows of every cell, in cell order.
  virtual Summary summarize(const std::vector<Row>& rows, unsigned workers) const = 0;
};

std::unique_ptr<Experiment> make_experiment(const ExperimentConfig& config);

}  // namespace cwsc::harness::detail
