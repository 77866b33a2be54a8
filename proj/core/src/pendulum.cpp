#include "klio/pendulum.hpp"

#include <cmath>
#include <numbers>

#include "klio/errors.hpp"

namespace klio {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t < 0) t += 2.0 * kPi;
  return t - kPi;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Bin masses of N(mu, std^2) over one clamped axis; boundary bins absorb the
// tails.
Eigen::VectorXd binned_normal_clamped(const GridSpace& grid, int axis, double mu,
                                      double std) {
  const auto& ax = grid.axis(axis);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(ax.bins);
  if (std <= 0.0) {
    mass[grid.locate_axis(axis, mu)] = 1.0;
    return mass;
  }
  const double width = grid.bin_width(axis);
  double prev = 0.0;  // CDF at the lower edge, tails folded into the ends
  for (int b = 0; b < ax.bins; ++b) {
    const double hi_edge = ax.lo + (b + 1) * width;
    const double next = b + 1 == ax.bins ? 1.0 : normal_cdf((hi_edge - mu) / std);
    mass[b] = next - prev;
    prev = next;
  }
  return mass;
}

// Bin masses of a wrapped normal over a periodic axis.
Eigen::VectorXd binned_normal_wrapped(const GridSpace& grid, int axis, double mu,
                                      double std) {
  const auto& ax = grid.axis(axis);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(ax.bins);
  if (std <= 0.0) {
    mass[grid.locate_axis(axis, mu)] = 1.0;
    return mass;
  }
  const double period = ax.hi - ax.lo;
  const double width = grid.bin_width(axis);
  const int shifts =
      static_cast<int>(std::ceil((8.0 * std + std::abs(mu) + period) / period));
  for (int m = -shifts; m <= shifts; ++m) {
    const double offset = m * period;
    for (int b = 0; b < ax.bins; ++b) {
      const double lo_edge = ax.lo + b * width + offset;
      mass[b] += normal_cdf((lo_edge + width - mu) / std) -
                 normal_cdf((lo_edge - mu) / std);
    }
  }
  const double total = mass.sum();
  if (!(total > 0.0)) throw NumericalError("wrapped normal mass vanished");
  return mass / total;
}

}  // namespace

double PendulumParams::theta_std() const {
  return noise_as_std ? theta_noise : std::sqrt(theta_noise);
}

double PendulumParams::omega_std() const {
  return noise_as_std ? omega_noise : std::sqrt(omega_noise);
}

PendulumParams PendulumParams::target() { return PendulumParams{}; }

PendulumParams PendulumParams::reference() {
  PendulumParams p;
  p.mass = 0.5;
  p.length = 0.5;
  return p;
}

PendulumState pendulum_step_mean(const PendulumParams& p, PendulumState s, double u) {
  PendulumState next;
  next.theta = wrap_angle(s.theta + s.omega * p.dt);
  next.omega = s.omega + (p.gravity / p.length * std::sin(s.theta) +
                          u / (p.mass * p.length * p.length)) *
                             p.dt;
  return next;
}

PendulumState pendulum_step(const PendulumParams& p, PendulumState s, double u,
                            Rng& rng) {
  PendulumState next = pendulum_step_mean(p, s, u);
  next.theta = wrap_angle(next.theta + p.theta_std() * normal01(rng));
  next.omega += p.omega_std() * normal01(rng);
  return next;
}

GridPtr pendulum_state_grid(const PendulumParams& p) {
  return make_grid({AxisSpec{-kPi, kPi, p.theta_bins, true},
                    AxisSpec{-p.omega_max, p.omega_max, p.omega_bins, false}});
}

GridPtr pendulum_action_grid(const PendulumParams& p) {
  return make_grid({AxisSpec{-p.torque_limit, p.torque_limit, p.torque_bins, false}});
}

TransitionKernel pendulum_binned_kernel(const PendulumParams& p, double uniform_floor) {
  if (uniform_floor < 0.0 || uniform_floor >= 1.0)
    throw ValidationError("uniform floor must lie in [0, 1)");
  auto state_grid = pendulum_state_grid(p);
  auto action_grid = pendulum_action_grid(p);
  const std::int64_t n_states = state_grid->size();
  const std::int64_t n_actions = action_grid->size();
  const std::int64_t omega_bins = p.omega_bins;

  Eigen::MatrixXd table(n_states * n_actions, n_states);
  for (std::int64_t x = 0; x < n_states; ++x) {
    const Eigen::VectorXd center = state_grid->center(x);
    for (std::int64_t u = 0; u < n_actions; ++u) {
      const double torque = action_grid->center(u)[0];
      const PendulumState mean =
          pendulum_step_mean(p, {center[0], center[1]}, torque);
      const Eigen::VectorXd theta_mass =
          binned_normal_wrapped(*state_grid, 0, mean.theta, p.theta_std());
      const Eigen::VectorXd omega_mass =
          binned_normal_clamped(*state_grid, 1, mean.omega, p.omega_std());
      Eigen::VectorXd row(n_states);
      for (int bt = 0; bt < p.theta_bins; ++bt)
        row.segment(bt * omega_bins, omega_bins) = theta_mass[bt] * omega_mass;
      if (uniform_floor > 0.0) {
        row = (1.0 - uniform_floor) * row +
              Eigen::VectorXd::Constant(n_states,
                                        uniform_floor / static_cast<double>(n_states));
      }
      table.row(x * n_actions + u) = row / row.sum();
    }
  }
  return TransitionKernel::stationary(std::move(state_grid), std::move(action_grid),
                                      std::move(table));
}

Eigen::VectorXd pendulum_stage_cost(const GridSpace& grid, double theta_d,
                                    double omega_d) {
  Eigen::VectorXd cost(grid.size());
  for (std::int64_t c = 0; c < grid.size(); ++c) {
    const Eigen::VectorXd x = grid.center(c);
    const double dt_ = x[0] - theta_d;
    const double dw = x[1] - omega_d;
    cost[c] = dt_ * dt_ + 0.01 * dw * dw;
  }
  return cost;
}

double swing_up_torque(const PendulumParams& p, const PendulumState& s) {
  const double ml2 = p.mass * p.length * p.length;
  const double energy =
      0.5 * ml2 * s.omega * s.omega + p.mass * p.gravity * p.length * std::cos(s.theta);
  const double energy_top = p.mass * p.gravity * p.length;

  double u;
  if (std::abs(s.theta) < 0.5 && std::abs(s.omega) < 2.0) {
    // PD hold around the upright equilibrium.
    const double k_p = 6.0, k_d = 4.0;
    u = -ml2 * ((p.gravity / p.length + k_p) * s.theta + k_d * s.omega);
  } else if (std::abs(s.omega) < 0.2 && std::cos(s.theta) < 0.0) {
    // Near rest in the lower half: kick along the current swing direction.
    u = 0.8 * p.torque_limit * (s.omega >= 0.0 ? 1.0 : -1.0);
  } else {
    const double k_e = 1.5;
    u = k_e * (energy_top - energy) * s.omega;
  }
  return std::clamp(u, -p.torque_limit, p.torque_limit);
}

PolicyKernel reference_pendulum_policy(const PendulumParams& p,
                                       double policy_noise_std) {
  if (!(policy_noise_std > 0.0))
    throw ValidationError("policy noise must be positive to cover the action grid");
  auto state_grid = pendulum_state_grid(p);
  auto action_grid = pendulum_action_grid(p);
  Eigen::MatrixXd table(state_grid->size(), action_grid->size());
  for (std::int64_t x = 0; x < state_grid->size(); ++x) {
    const Eigen::VectorXd center = state_grid->center(x);
    const double u = swing_up_torque(p, {center[0], center[1]});
    table.row(x) =
        binned_normal_clamped(*action_grid, 0, u, policy_noise_std).transpose();
  }
  return PolicyKernel::stationary(std::move(state_grid), std::move(action_grid),
                                  std::move(table));
}

Database simulate_pendulum_database(const PendulumParams& p, int episodes, int steps,
                                    std::uint64_t root_seed) {
  if (episodes < 1 || steps < 1)
    throw ValidationError("database simulation needs episodes >= 1 and steps >= 1");
  Database db;
  db.reserve(static_cast<size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    Rng rng = derive_stream(root_seed, static_cast<std::uint64_t>(e));
    PendulumState s;
    s.theta = -kPi + 2.0 * kPi * uniform01(rng);
    s.omega = -p.omega_max + 2.0 * p.omega_max * uniform01(rng);
    Dataset ds;
    for (int k = 1; k <= steps; ++k) {
      const double u = -p.torque_limit + 2.0 * p.torque_limit * uniform01(rng);
      StepRecord rec;
      rec.k = k;
      rec.x_prev = Eigen::Vector2d(s.theta, s.omega);
      rec.u = Eigen::VectorXd::Constant(1, u);
      ds.pairs.push_back(std::move(rec));
      s = pendulum_step(p, s, u, rng);
    }
    ds.terminal = Eigen::Vector2d(s.theta, s.omega);
    db.push_back(std::move(ds));
  }
  return db;
}

Dataset simulate_pendulum_policy(const PendulumParams& p, const PolicyKernel& policy,
                                 PendulumState start, int steps, Rng& rng) {
  const auto& state_grid = *policy.state_grid();
  const auto& action_grid = *policy.action_grid();
  Dataset ds;
  PendulumState s = start;
  for (int k = 1; k <= steps; ++k) {
    const std::int64_t cell = state_grid.locate(Eigen::Vector2d(s.theta, s.omega));
    const std::int64_t u_cell =
        sample_mass(policy.table_at_step(1).row(cell).transpose(), rng);
    const double u = action_grid.center(u_cell)[0];
    StepRecord rec;
    rec.k = k;
    rec.x_prev = Eigen::Vector2d(s.theta, s.omega);
    rec.u = Eigen::VectorXd::Constant(1, u);
    ds.pairs.push_back(std::move(rec));
    s = pendulum_step(p, s, u, rng);
  }
  ds.terminal = Eigen::Vector2d(s.theta, s.omega);
  return ds;
}

}  // namespace klio
