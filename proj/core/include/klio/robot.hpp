#pragma once

#include <Eigen/Dense>
#include <vector>

#include "klio/kernel.hpp"
#include "klio/rng.hpp"

namespace klio {

struct Obstacle {
  Eigen::Vector2d center;
  Eigen::Matrix2d cov;    // bump covariance in the cost field
  double radius = 0.15;   // disk used for collision checks
};

// Planar single integrator x' ~ N(x + u dt, Sigma) on a rectangular work
// area with box-bounded velocities.
struct RobotParams {
  double dt = 0.033;
  Eigen::Vector2d area_lo{-1.5, -1.0};
  Eigen::Vector2d area_hi{1.5, 1.0};
  double velocity_limit = 0.5;
  Eigen::Matrix2d noise_cov = (Eigen::Matrix2d() << 0.001, 0.0002,
                                                    0.0002, 0.001).finished();
  Eigen::Vector2d goal{-1.4, -0.9};
  std::vector<Obstacle> obstacles;
  double boundary_margin = 0.1;

  // Desk-scale grids.
  int state_bins_x = 25;
  int state_bins_y = 17;
  int action_bins = 5;  // per velocity axis
};

Eigen::Vector2d robot_step(const RobotParams& p, const Eigen::Vector2d& x,
                           const Eigen::Vector2d& u, Rng& rng);
Eigen::Vector2d robot_step_mean(const RobotParams& p, const Eigen::Vector2d& x,
                                const Eigen::Vector2d& u);

// Normalized Gaussian bump centered on an obstacle.
double obstacle_bump(const Obstacle& o, const Eigen::Vector2d& x);

// Smooth hinge on the four walls: sum of max(0, margin - distance)^2, zero
// strictly inside the margin band.
double boundary_penalty(const RobotParams& p, const Eigen::Vector2d& x);

// 30 ||x - goal||^2 + 20 sum_i bump_i(x) + 10 b(x).
double obstacle_cost(const RobotParams& p, const Eigen::Vector2d& x);

GridPtr robot_state_grid(const RobotParams& p);
GridPtr robot_action_grid(const RobotParams& p);

// Binned transition law of the correlated Gaussian step; per-cell masses by
// tensor Gauss-Legendre quadrature over a window around the mean, then
// renormalized.
TransitionKernel robot_binned_kernel(const RobotParams& p);

// obstacle_cost evaluated at cell centers.
Eigen::VectorXd robot_stage_cost(const RobotParams& p, const GridSpace& grid);

}  // namespace klio
