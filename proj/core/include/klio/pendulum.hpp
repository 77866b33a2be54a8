#pragma once

#include <Eigen/Dense>

#include "klio/dataset.hpp"
#include "klio/kernel.hpp"
#include "klio/rng.hpp"

namespace klio {

// Stochastic pendulum with the angle measured from the upright (unstable)
// equilibrium:
//   theta' = theta + omega dt + W_theta
//   omega' = omega + (g/l sin(theta) + u/(m l^2)) dt + W_omega
// theta wraps to [-pi, pi). The second parameter of the noise is a variance
// by default; set noise_as_std to read it as a standard deviation.
struct PendulumParams {
  double mass = 1.0;       // kg
  double length = 0.6;     // m
  double gravity = 9.81;   // m/s^2
  double dt = 0.1;         // s
  double theta_noise = 0.05;
  double omega_noise = 0.1;
  bool noise_as_std = false;
  double torque_limit = 2.5;

  int theta_bins = 25;
  int omega_bins = 25;
  int torque_bins = 11;
  double omega_max = 5.0;

  double theta_std() const;
  double omega_std() const;

  // Paper pairing: the plant to control (1 kg, 0.6 m) and the model the
  // references are extracted from (0.5 kg, 0.5 m).
  static PendulumParams target();
  static PendulumParams reference();
};

struct PendulumState {
  double theta = 0.0;
  double omega = 0.0;
};

PendulumState pendulum_step(const PendulumParams& p, PendulumState s, double u,
                            Rng& rng);
PendulumState pendulum_step_mean(const PendulumParams& p, PendulumState s, double u);

GridPtr pendulum_state_grid(const PendulumParams& p);   // theta wraps
GridPtr pendulum_action_grid(const PendulumParams& p);

// Exact binned transition law: wrapped normal along theta times clamped
// normal along omega, evaluated per (state, action) cell center. A small
// uniform floor keeps every row mutually absolutely continuous so the
// KL tables downstream stay finite.
TransitionKernel pendulum_binned_kernel(const PendulumParams& p,
                                        double uniform_floor = 1e-6);

// Stage cost (theta - theta_d)^2 + 0.01 (omega - omega_d)^2 on cell centers.
Eigen::VectorXd pendulum_stage_cost(const GridSpace& grid, double theta_d = 0.0,
                                    double omega_d = 0.0);

// Energy-shaping swing-up feedback with PD stabilization near the top,
// Gaussian-perturbed and discretized over the action grid. Stands in for a
// stabilizing reference controller.
PolicyKernel reference_pendulum_policy(const PendulumParams& p,
                                       double policy_noise_std = 0.4);

// Deterministic torque of the energy-shaping controller (exposed for tests).
double swing_up_torque(const PendulumParams& p, const PendulumState& s);

// Episodes driven by uniformly random inputs from uniformly random starts;
// per-episode streams derive from the root seed.
Database simulate_pendulum_database(const PendulumParams& p, int episodes,
                                    int steps, std::uint64_t root_seed);

// Closed-loop simulation of the continuous pendulum under a tabular policy
// (state looked up by cell, action sampled then read at its cell center).
Dataset simulate_pendulum_policy(const PendulumParams& p, const PolicyKernel& policy,
                                 PendulumState start, int steps, Rng& rng);

}  // namespace klio
