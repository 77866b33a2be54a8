#include "klio/estimation.hpp"

#include "klio/errors.hpp"

namespace klio {

TransitionCounts TransitionCounts::zero(GridPtr state_grid, GridPtr action_grid) {
  TransitionCounts c;
  c.counts = Eigen::MatrixXd::Zero(state_grid->size() * action_grid->size(),
                                   state_grid->size());
  c.state_grid = std::move(state_grid);
  c.action_grid = std::move(action_grid);
  return c;
}

void TransitionCounts::add(const Dataset& ds) {
  ds.validate();
  const std::int64_t n_actions = action_grid->size();
  for (size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto& rec = ds.pairs[i];
    const std::int64_t x = state_grid->locate(rec.x_prev);
    const std::int64_t u = action_grid->locate(rec.u);
    const std::int64_t x_next = state_grid->locate(ds.next_state(i));
    counts(x * n_actions + u, x_next) += 1.0;
  }
}

void TransitionCounts::merge(const TransitionCounts& other) {
  if (!state_grid->same_geometry(*other.state_grid) ||
      !action_grid->same_geometry(*other.action_grid))
    throw ValidationError("cannot merge counts over different grids");
  counts += other.counts;
}

TransitionKernel kernel_from_counts(const TransitionCounts& counts,
                                    const HistogramOptions& options) {
  if (options.smoothing < 0.0) throw ValidationError("smoothing must be >= 0");
  const std::int64_t n_states = counts.state_grid->size();
  const std::int64_t n_actions = counts.action_grid->size();
  Eigen::MatrixXd table(n_states * n_actions, n_states);

  for (std::int64_t x = 0; x < n_states; ++x) {
    for (std::int64_t u = 0; u < n_actions; ++u) {
      const std::int64_t r = x * n_actions + u;
      const double visits = counts.counts.row(r).sum();
      const double denom = visits + options.smoothing * static_cast<double>(n_states);
      if (denom > 0.0) {
        table.row(r) =
            (counts.counts.row(r).array() + options.smoothing) / denom;
      } else if (options.unvisited == HistogramOptions::Unvisited::kUniform) {
        table.row(r).setConstant(1.0 / static_cast<double>(n_states));
      } else {
        table.row(r).setZero();
        table(r, x) = 1.0;  // stay put
      }
    }
  }
  return TransitionKernel::stationary(counts.state_grid, counts.action_grid,
                                      std::move(table));
}

TransitionKernel histogram_estimate(const Database& db, GridPtr state_grid,
                                    GridPtr action_grid,
                                    const HistogramOptions& options) {
  if (db.empty()) throw ValidationError("histogram estimate needs a nonempty database");
  auto counts = TransitionCounts::zero(std::move(state_grid), std::move(action_grid));
  for (const auto& ds : db) counts.add(ds);
  return kernel_from_counts(counts, options);
}

}  // namespace klio
