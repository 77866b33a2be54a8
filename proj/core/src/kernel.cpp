#include "klio/kernel.hpp"

#include <cmath>

#include "klio/errors.hpp"

namespace klio {

namespace {

void check_rows(const Eigen::MatrixXd& table, std::int64_t rows, std::int64_t cols,
                const char* what) {
  if (table.rows() != rows || table.cols() != cols)
    throw ValidationError(std::string(what) + ": table has wrong shape");
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      if (!(table(r, c) >= 0.0))
        throw ValidationError(std::string(what) + ": negative or NaN row entry");
      total += table(r, c);
    }
    if (std::abs(total - 1.0) > DiscreteDistribution::kMassTolerance)
      throw ValidationError(std::string(what) +
                            ": row does not sum to 1 within 1e-12 (row " +
                            std::to_string(r) + ")");
  }
}

}  // namespace

TransitionKernel::TransitionKernel(GridPtr state_grid, GridPtr action_grid,
                                   std::vector<Eigen::MatrixXd> tables)
    : state_grid_(std::move(state_grid)),
      action_grid_(std::move(action_grid)),
      tables_(std::move(tables)) {
  if (!state_grid_ || !action_grid_)
    throw ValidationError("transition kernel needs grids");
  if (tables_.empty())
    throw ValidationError("transition kernel needs at least one table");
  const std::int64_t rows = n_states() * n_actions();
  for (const auto& t : tables_) check_rows(t, rows, n_states(), "transition kernel");
}

TransitionKernel TransitionKernel::stationary(GridPtr state_grid, GridPtr action_grid,
                                              Eigen::MatrixXd table) {
  std::vector<Eigen::MatrixXd> tables;
  tables.push_back(std::move(table));
  return TransitionKernel(std::move(state_grid), std::move(action_grid),
                          std::move(tables));
}

const Eigen::MatrixXd& TransitionKernel::table_at_step(int k) const {
  if (is_stationary()) return tables_[0];
  if (k < 1 || k > steps())
    throw ValidationError("transition kernel: step out of range");
  return tables_[static_cast<size_t>(k - 1)];
}

Eigen::VectorXd TransitionKernel::row(int k, std::int64_t state,
                                      std::int64_t action) const {
  return table_at_step(k).row(row_index(state, action)).transpose();
}

DiscreteDistribution TransitionKernel::row_distribution(int k, std::int64_t state,
                                                        std::int64_t action) const {
  return DiscreteDistribution(state_grid_, row(k, state, action));
}

PolicyKernel::PolicyKernel(GridPtr state_grid, GridPtr action_grid,
                           std::vector<Eigen::MatrixXd> tables)
    : state_grid_(std::move(state_grid)),
      action_grid_(std::move(action_grid)),
      tables_(std::move(tables)) {
  if (!state_grid_ || !action_grid_) throw ValidationError("policy kernel needs grids");
  if (tables_.empty()) throw ValidationError("policy kernel needs at least one table");
  for (const auto& t : tables_)
    check_rows(t, state_grid_->size(), action_grid_->size(), "policy kernel");
}

PolicyKernel PolicyKernel::stationary(GridPtr state_grid, GridPtr action_grid,
                                      Eigen::MatrixXd table) {
  std::vector<Eigen::MatrixXd> tables;
  tables.push_back(std::move(table));
  return PolicyKernel(std::move(state_grid), std::move(action_grid), std::move(tables));
}

PolicyKernel PolicyKernel::uniform(GridPtr state_grid, GridPtr action_grid, int steps) {
  const double mass = 1.0 / static_cast<double>(action_grid->size());
  Eigen::MatrixXd table =
      Eigen::MatrixXd::Constant(state_grid->size(), action_grid->size(), mass);
  std::vector<Eigen::MatrixXd> tables(static_cast<size_t>(steps), table);
  return PolicyKernel(std::move(state_grid), std::move(action_grid), std::move(tables));
}

const Eigen::MatrixXd& PolicyKernel::table_at_step(int k) const {
  if (is_stationary()) return tables_[0];
  if (k < 1 || k > steps()) throw ValidationError("policy kernel: step out of range");
  return tables_[static_cast<size_t>(k - 1)];
}

Eigen::VectorXd PolicyKernel::row(int k, std::int64_t state) const {
  return table_at_step(k).row(state).transpose();
}

DiscreteDistribution PolicyKernel::row_distribution(int k, std::int64_t state) const {
  return DiscreteDistribution(action_grid_, row(k, state));
}

TransitionKernel uniform_transition_kernel(GridPtr state_grid, GridPtr action_grid) {
  const std::int64_t s = state_grid->size();
  const std::int64_t a = action_grid->size();
  Eigen::MatrixXd table =
      Eigen::MatrixXd::Constant(s * a, s, 1.0 / static_cast<double>(s));
  return TransitionKernel::stationary(std::move(state_grid), std::move(action_grid),
                                      std::move(table));
}

}  // namespace klio
