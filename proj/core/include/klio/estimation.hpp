#pragma once

#include <Eigen/Dense>

#include "klio/dataset.hpp"
#include "klio/kernel.hpp"

namespace klio {

struct HistogramOptions {
  double smoothing = 0.0;  // additive count per next-state cell
  // What a never-visited (state, action) row becomes when smoothing is 0.
  enum class Unvisited { kUniform, kStay };
  Unvisited unvisited = Unvisited::kUniform;
};

// Raw transition counts; merging is associative and commutative so datasets
// may be counted in shards.
struct TransitionCounts {
  GridPtr state_grid;
  GridPtr action_grid;
  Eigen::MatrixXd counts;  // (state * n_actions + action) x next-state

  static TransitionCounts zero(GridPtr state_grid, GridPtr action_grid);
  void add(const Dataset& ds);
  void merge(const TransitionCounts& other);
};

// Histogram filter: row(x, u) = (count(x, u, x') + s) / (count(x, u, .) +
// s * |X|); unvisited rows fall back per HistogramOptions.
TransitionKernel histogram_estimate(const Database& db, GridPtr state_grid,
                                    GridPtr action_grid,
                                    const HistogramOptions& options = {});

TransitionKernel kernel_from_counts(const TransitionCounts& counts,
                                    const HistogramOptions& options = {});

}  // namespace klio
