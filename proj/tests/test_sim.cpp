#include <doctest.h>

#include <cmath>
#include <numbers>

#include "klio/estimation.hpp"
#include "klio/pendulum.hpp"
#include "klio/robot.hpp"
#include "test_support.hpp"

using namespace klio;

TEST_CASE("pendulum equilibria and the hand-computed drift") {
  PendulumParams p = PendulumParams::target();

  const auto top = pendulum_step_mean(p, {0.0, 0.0}, 0.0);
  CHECK(top.theta == 0.0);
  CHECK(top.omega == 0.0);

  const auto bottom = pendulum_step_mean(p, {-std::numbers::pi, 0.0}, 0.0);
  CHECK(std::abs(bottom.omega) <= 1e-12);

  // omega' = (9.81 / 0.6) * sin(pi/2) * 0.1 = 1.635
  const auto kick = pendulum_step_mean(p, {std::numbers::pi / 2, 0.0}, 0.0);
  CHECK(kick.omega == doctest::Approx(1.635).epsilon(1e-12));
  CHECK(kick.theta == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("pendulum angle stays wrapped and noise is seed-deterministic") {
  PendulumParams p = PendulumParams::target();
  Rng rng(7);
  PendulumState s{3.0, 4.5};
  for (int i = 0; i < 200; ++i) {
    s = pendulum_step(p, s, 1.0, rng);
    CHECK(s.theta >= -std::numbers::pi);
    CHECK(s.theta < std::numbers::pi);
  }
  Rng a(3), b(3);
  PendulumState sa{1.0, 0.5}, sb{1.0, 0.5};
  for (int i = 0; i < 50; ++i) {
    sa = pendulum_step(p, sa, -0.7, a);
    sb = pendulum_step(p, sb, -0.7, b);
    CHECK(sa.theta == sb.theta);
    CHECK(sa.omega == sb.omega);
  }
}

TEST_CASE("noise parameters read as variances with a std switch") {
  PendulumParams p;
  p.theta_noise = 0.05;
  CHECK(p.theta_std() == doctest::Approx(std::sqrt(0.05)));
  p.noise_as_std = true;
  CHECK(p.theta_std() == doctest::Approx(0.05));
}

TEST_CASE("binned pendulum kernel: valid rows and zero-noise drift direction") {
  PendulumParams p = PendulumParams::target();
  p.theta_bins = 13;
  p.omega_bins = 13;
  p.torque_bins = 5;
  const auto kernel = pendulum_binned_kernel(p);  // constructor validates rows

  // Zero-noise version is a lattice map following the drift.
  PendulumParams quiet = p;
  quiet.theta_noise = 0.0;
  quiet.omega_noise = 0.0;
  const auto lattice = pendulum_binned_kernel(quiet, 0.0);
  const auto& sg = *lattice.state_grid();
  const auto& ag = *lattice.action_grid();
  for (std::int64_t x = 0; x < sg.size(); x += 7) {
    for (std::int64_t u = 0; u < ag.size(); ++u) {
      const auto row = lattice.row(1, x, u);
      const auto center = sg.center(x);
      const auto mean =
          pendulum_step_mean(quiet, {center[0], center[1]}, ag.center(u)[0]);
      std::int64_t argmax = 0;
      row.maxCoeff(&argmax);
      CHECK(argmax == sg.locate(Eigen::Vector2d(mean.theta, mean.omega)));
    }
  }

  // With noise, expected next omega still moves with the drift on average.
  const auto center = sg.center(sg.locate(Eigen::Vector2d(1.0, 0.0)));
  const auto row = kernel.row(1, sg.locate(Eigen::Vector2d(1.0, 0.0)),
                              ag.locate(Eigen::VectorXd::Constant(1, 0.0)));
  double mean_omega = 0.0;
  for (std::int64_t c = 0; c < sg.size(); ++c) mean_omega += row[c] * sg.center(c)[1];
  CHECK(mean_omega > center[1] + 0.5);  // gravity accelerates the fall
}

TEST_CASE("simulated episodes carry one pair per step plus the terminal state") {
  PendulumParams p = PendulumParams::target();
  const auto db = simulate_pendulum_database(p, 1, 100, 7);
  REQUIRE(db.size() == 1);
  CHECK(db[0].pairs.size() == 100);
  CHECK(db[0].terminal.size() == 2);
  db[0].validate();
}

TEST_CASE("histogram closure: estimated pendulum kernel is a valid kernel") {
  PendulumParams p = PendulumParams::target();
  p.theta_bins = 9;
  p.omega_bins = 9;
  p.torque_bins = 3;
  const auto db = simulate_pendulum_database(p, 50, 40, 12345);
  REQUIRE(db.size() == 50);
  const auto kernel =
      histogram_estimate(db, pendulum_state_grid(p), pendulum_action_grid(p));
  CHECK(kernel.n_states() == 81);
  // Spot-check: visited rows reproduce the downward-drift sign for a hanging
  // pendulum with no torque (gravity pulls toward -omega for theta < 0).
  const auto& sg = *kernel.state_grid();
  const auto row = kernel.row(1, sg.locate(Eigen::Vector2d(-1.5, 0.0)),
                              kernel.action_grid()->locate(Eigen::VectorXd::Zero(1)));
  double mean_omega = 0.0;
  for (std::int64_t c = 0; c < sg.size(); ++c) mean_omega += row[c] * sg.center(c)[1];
  CHECK(mean_omega < 0.0);
}

TEST_CASE("swing-up reference policy: hold near the top, pump at the bottom") {
  PendulumParams p = PendulumParams::reference();
  const auto policy = reference_pendulum_policy(p);
  const auto& sg = *policy.state_grid();
  const auto& ag = *policy.action_grid();

  const auto top_row = policy.row(1, sg.locate(Eigen::Vector2d(0.05, 0.0)));
  double top_mean = 0.0;
  for (std::int64_t u = 0; u < ag.size(); ++u)
    top_mean += top_row[u] * ag.center(u)[0];
  CHECK(std::abs(top_mean) <= 0.5);

  const auto bottom_row =
      policy.row(1, sg.locate(Eigen::Vector2d(-std::numbers::pi + 0.01, 0.0)));
  double bottom_mean = 0.0;
  for (std::int64_t u = 0; u < ag.size(); ++u)
    bottom_mean += bottom_row[u] * ag.center(u)[0];
  CHECK(std::abs(bottom_mean) > 0.8);  // pumping torque, well away from zero
}

TEST_CASE("robot step: fixed point, hand drift, determinism") {
  RobotParams p;
  Rng rng(5);
  const Eigen::Vector2d x(0.0, 0.0);

  CHECK((robot_step_mean(p, x, Eigen::Vector2d::Zero()) - x).norm() == 0.0);
  const Eigen::Vector2d moved = robot_step_mean(p, x, Eigen::Vector2d(0.5, 0.0));
  CHECK(moved[0] == doctest::Approx(0.0165));
  CHECK(moved[1] == 0.0);

  Rng a(11), b(11);
  const auto s1 = robot_step(p, x, Eigen::Vector2d(0.1, -0.2), a);
  const auto s2 = robot_step(p, x, Eigen::Vector2d(0.1, -0.2), b);
  CHECK((s1 - s2).norm() == 0.0);
}

TEST_CASE("obstacle cost field: peak, goal, tails, boundary") {
  RobotParams p;
  Obstacle o{Eigen::Vector2d(0.2, 0.1), 0.02 * Eigen::Matrix2d::Identity(), 0.15};
  p.obstacles = {o};

  const double peak = obstacle_bump(o, o.center);
  CHECK(peak == doctest::Approx(1.0 / (2.0 * std::numbers::pi * 0.02)).epsilon(1e-12));

  // Tail ratio at six standard deviations.
  const double sd = std::sqrt(0.02);
  const double far = obstacle_bump(o, o.center + Eigen::Vector2d(6.0 * sd, 0.0));
  CHECK(far / peak <= 2e-8);

  // At the goal with no obstacles nearby and strictly inside the margin band
  // the cost is the quadratic term alone; exactly at the goal it vanishes.
  RobotParams clean;
  clean.goal = Eigen::Vector2d(0.0, 0.0);
  CHECK(obstacle_cost(clean, clean.goal) == doctest::Approx(0.0));

  CHECK(boundary_penalty(p, Eigen::Vector2d(0.0, 0.0)) == 0.0);
  CHECK(boundary_penalty(p, Eigen::Vector2d(-1.45, 0.0)) > 0.0);
  const double margin_edge = boundary_penalty(p, Eigen::Vector2d(-1.4, 0.0));
  CHECK(margin_edge == doctest::Approx(0.0));
}

TEST_CASE("binned robot kernel integrates the correlated Gaussian") {
  RobotParams p;
  p.state_bins_x = 11;
  p.state_bins_y = 7;
  p.action_bins = 3;
  const auto kernel = robot_binned_kernel(p);  // rows validated on build
  const auto& sg = *kernel.state_grid();

  // Interior row: compare the row mean against the analytic step mean.
  const std::int64_t x = sg.locate(Eigen::Vector2d(0.0, 0.0));
  const std::int64_t u = kernel.action_grid()->locate(Eigen::Vector2d(0.5, 0.5));
  const auto row = kernel.row(1, x, u);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (std::int64_t c = 0; c < sg.size(); ++c)
    mean += row[c] * sg.center(c).head<2>();
  const Eigen::Vector2d expected =
      robot_step_mean(p, sg.center(x).head<2>(), Eigen::Vector2d(0.5, 0.5));
  // Within a fraction of a cell (binning quantizes the mean).
  CHECK((mean - expected).cwiseAbs().maxCoeff() <= 0.5 * sg.bin_width(0));
}
