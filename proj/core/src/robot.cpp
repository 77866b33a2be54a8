#include "klio/robot.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "klio/errors.hpp"

namespace klio {

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

}  // namespace

Eigen::Vector2d robot_step_mean(const RobotParams& p, const Eigen::Vector2d& x,
                                const Eigen::Vector2d& u) {
  return x + u * p.dt;
}

Eigen::Vector2d robot_step(const RobotParams& p, const Eigen::Vector2d& x,
                           const Eigen::Vector2d& u, Rng& rng) {
  const Eigen::LLT<Eigen::Matrix2d> llt(p.noise_cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("robot noise covariance is not positive definite");
  Eigen::Vector2d z(normal01(rng), normal01(rng));
  Eigen::Vector2d next = robot_step_mean(p, x, u) + Eigen::Matrix2d(llt.matrixL()) * z;
  // The work area is walled; positions saturate at the boundary.
  return next.cwiseMax(p.area_lo).cwiseMin(p.area_hi);
}

double obstacle_bump(const Obstacle& o, const Eigen::Vector2d& x) {
  const Eigen::Vector2d d = x - o.center;
  const double det = o.cov.determinant();
  if (!(det > 0.0)) throw ValidationError("obstacle covariance must be PD");
  const double quad = d.dot(o.cov.inverse() * d);
  return std::exp(-0.5 * quad) / std::sqrt(std::pow(2.0 * std::numbers::pi, 2) * det);
}

double boundary_penalty(const RobotParams& p, const Eigen::Vector2d& x) {
  double acc = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double lo_gap = p.boundary_margin - (x[d] - p.area_lo[d]);
    const double hi_gap = p.boundary_margin - (p.area_hi[d] - x[d]);
    if (lo_gap > 0.0) acc += lo_gap * lo_gap;
    if (hi_gap > 0.0) acc += hi_gap * hi_gap;
  }
  return acc;
}

double obstacle_cost(const RobotParams& p, const Eigen::Vector2d& x) {
  double bumps = 0.0;
  for (const auto& o : p.obstacles) bumps += obstacle_bump(o, x);
  return 30.0 * (x - p.goal).squaredNorm() + 20.0 * bumps +
         10.0 * boundary_penalty(p, x);
}

GridPtr robot_state_grid(const RobotParams& p) {
  return make_grid({AxisSpec{p.area_lo[0], p.area_hi[0], p.state_bins_x, false},
                    AxisSpec{p.area_lo[1], p.area_hi[1], p.state_bins_y, false}});
}

GridPtr robot_action_grid(const RobotParams& p) {
  return make_grid({AxisSpec{-p.velocity_limit, p.velocity_limit, p.action_bins, false},
                    AxisSpec{-p.velocity_limit, p.velocity_limit, p.action_bins, false}});
}

TransitionKernel robot_binned_kernel(const RobotParams& p) {
  auto state_grid = robot_state_grid(p);
  auto action_grid = robot_action_grid(p);
  const std::int64_t n_states = state_grid->size();
  const std::int64_t n_actions = action_grid->size();

  const Eigen::LLT<Eigen::Matrix2d> llt(p.noise_cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("robot noise covariance is not positive definite");
  const Eigen::Matrix2d precision =
      llt.solve(Eigen::Matrix2d::Identity());
  const double norm_const =
      1.0 / (2.0 * std::numbers::pi * std::sqrt(p.noise_cov.determinant()));
  const double sigma_max = std::sqrt(
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(p.noise_cov).eigenvalues().maxCoeff());

  const int bins_x = p.state_bins_x;
  const int bins_y = p.state_bins_y;
  const double wx = state_grid->bin_width(0);
  const double wy = state_grid->bin_width(1);

  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(n_states * n_actions, n_states);
  for (std::int64_t x = 0; x < n_states; ++x) {
    const Eigen::Vector2d cx = state_grid->center(x);
    for (std::int64_t u = 0; u < n_actions; ++u) {
      const Eigen::Vector2d cu = action_grid->center(u);
      const Eigen::Vector2d mean = robot_step_mean(p, cx, cu);
      // Quadrature window: +-6 sigma, clipped to the grid (the mean drifts
      // at most a fraction of a cell, so clipping loses negligible mass).
      const int bx_lo = std::clamp(
          static_cast<int>(std::floor((mean[0] - 6 * sigma_max - p.area_lo[0]) / wx)), 0,
          bins_x - 1);
      const int bx_hi = std::clamp(
          static_cast<int>(std::floor((mean[0] + 6 * sigma_max - p.area_lo[0]) / wx)), 0,
          bins_x - 1);
      const int by_lo = std::clamp(
          static_cast<int>(std::floor((mean[1] - 6 * sigma_max - p.area_lo[1]) / wy)), 0,
          bins_y - 1);
      const int by_hi = std::clamp(
          static_cast<int>(std::floor((mean[1] + 6 * sigma_max - p.area_lo[1]) / wy)), 0,
          bins_y - 1);

      const std::int64_t r = x * n_actions + u;
      for (int bx = bx_lo; bx <= bx_hi; ++bx) {
        const double x0 = p.area_lo[0] + bx * wx;
        for (int by = by_lo; by <= by_hi; ++by) {
          const double y0 = p.area_lo[1] + by * wy;
          double mass = 0.0;
          for (size_t i = 0; i < kGlNodes.size(); ++i) {
            const double px = x0 + 0.5 * wx * (1.0 + kGlNodes[i]);
            for (size_t j = 0; j < kGlNodes.size(); ++j) {
              const double py = y0 + 0.5 * wy * (1.0 + kGlNodes[j]);
              const Eigen::Vector2d d(px - mean[0], py - mean[1]);
              mass += kGlWeights[i] * kGlWeights[j] *
                      std::exp(-0.5 * d.dot(precision * d));
            }
          }
          mass *= norm_const * 0.25 * wx * wy;
          table(r, bx * bins_y + by) = mass;
        }
      }
      const double total = table.row(r).sum();
      if (!(total > 0.0))
        throw NumericalError("robot kernel row has no mass (state " +
                             std::to_string(x) + ")");
      table.row(r) /= total;
    }
  }
  return TransitionKernel::stationary(std::move(state_grid), std::move(action_grid),
                                      std::move(table));
}

Eigen::VectorXd robot_stage_cost(const RobotParams& p, const GridSpace& grid) {
  Eigen::VectorXd cost(grid.size());
  for (std::int64_t c = 0; c < grid.size(); ++c)
    cost[c] = obstacle_cost(p, grid.center(c).head<2>());
  return cost;
}

}  // namespace klio
