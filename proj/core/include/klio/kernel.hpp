#pragma once

#include <Eigen/Dense>
#include <vector>

#include "klio/distribution.hpp"
#include "klio/grid.hpp"

namespace klio {

// Conditional next-state tables p(x_k | x_{k-1}, u_k). One matrix per
// time-step, or a single shared matrix when stationary; rows are indexed by
// state * n_actions + action and each row is a distribution over next-state
// cells. Steps are 1-based to match the horizon convention.
class TransitionKernel {
 public:
  TransitionKernel(GridPtr state_grid, GridPtr action_grid,
                   std::vector<Eigen::MatrixXd> tables);

  static TransitionKernel stationary(GridPtr state_grid, GridPtr action_grid,
                                     Eigen::MatrixXd table);

  const GridPtr& state_grid() const { return state_grid_; }
  const GridPtr& action_grid() const { return action_grid_; }
  bool is_stationary() const { return tables_.size() == 1; }
  int steps() const { return static_cast<int>(tables_.size()); }

  std::int64_t n_states() const { return state_grid_->size(); }
  std::int64_t n_actions() const { return action_grid_->size(); }
  std::int64_t row_index(std::int64_t state, std::int64_t action) const {
    return state * n_actions() + action;
  }

  const Eigen::MatrixXd& table_at_step(int k) const;

  Eigen::VectorXd row(int k, std::int64_t state, std::int64_t action) const;
  DiscreteDistribution row_distribution(int k, std::int64_t state,
                                        std::int64_t action) const;

 private:
  GridPtr state_grid_;
  GridPtr action_grid_;
  std::vector<Eigen::MatrixXd> tables_;
};

// Randomized policies p(u_k | x_{k-1}): per-step state x action tables.
class PolicyKernel {
 public:
  PolicyKernel(GridPtr state_grid, GridPtr action_grid,
               std::vector<Eigen::MatrixXd> tables);

  static PolicyKernel stationary(GridPtr state_grid, GridPtr action_grid,
                                 Eigen::MatrixXd table);
  static PolicyKernel uniform(GridPtr state_grid, GridPtr action_grid, int steps = 1);

  const GridPtr& state_grid() const { return state_grid_; }
  const GridPtr& action_grid() const { return action_grid_; }
  bool is_stationary() const { return tables_.size() == 1; }
  int steps() const { return static_cast<int>(tables_.size()); }

  const Eigen::MatrixXd& table_at_step(int k) const;
  Eigen::VectorXd row(int k, std::int64_t state) const;
  DiscreteDistribution row_distribution(int k, std::int64_t state) const;

 private:
  GridPtr state_grid_;
  GridPtr action_grid_;
  std::vector<Eigen::MatrixXd> tables_;
};

// Uniform conditional table (every row uniform over next states); handy as a
// reference model.
TransitionKernel uniform_transition_kernel(GridPtr state_grid, GridPtr action_grid);

}  // namespace klio
