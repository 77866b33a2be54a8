#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "klio/pendulum.hpp"
#include "klio/robot.hpp"

namespace klio::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 2;
inline constexpr int kNumericalFailure = 3;
inline constexpr int kNonConvergence = 4;

// A scenario file describes one benchmark environment and its grids.
struct Scenario {
  enum class Kind { kPendulum, kRobot };
  Kind kind = Kind::kPendulum;
  PendulumParams pendulum;
  RobotParams robot;

  GridPtr state_grid() const;
  GridPtr action_grid() const;
};
Scenario load_scenario(const std::filesystem::path& p);

struct SimulateOptions {
  std::filesystem::path scenario;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  int episodes = 100;
  int steps = 100;
  // Closed-loop mode: sample inputs from a tabular policy instead of the
  // uniform exploration law.
  std::optional<std::filesystem::path> policy;
  std::vector<double> start;  // start state for closed-loop runs
  // Instead of simulating, write the scenario's built-in reference policy
  // (the noised swing-up controller for the pendulum).
  std::optional<std::filesystem::path> emit_reference_policy;
  double reference_policy_noise = 0.8;
};
int run_simulate(const SimulateOptions& opts);

struct EstimateOptions {
  std::filesystem::path scenario;
  std::filesystem::path database_dir;
  std::filesystem::path out;
  double smoothing = 0.0;
  bool unvisited_stay = false;
};
int run_estimate(const EstimateOptions& opts);

struct FocOptions {
  std::filesystem::path problem;  // bundle JSON
  std::filesystem::path out_policy;
  std::filesystem::path report;  // JSON: optimal cost (+ boundedness)
  bool gaussian = false;         // problem bundle references a Gaussian model
};
int run_foc(const FocOptions& opts);

struct IocFitOptions {
  std::filesystem::path problem;  // bundle JSON
  std::filesystem::path out_weights;
  std::filesystem::path out_cost;
};
int run_ioc_fit(const IocFitOptions& opts);

struct EvalOptions {
  std::filesystem::path true_cost;
  std::filesystem::path estimated_cost;
  std::filesystem::path out;  // JSON report
  // Optional closed-loop success metric: roll a policy out on a scenario
  // and report the fraction of seeded runs entering the success region
  // (|theta| below the radius for the pendulum, goal distance below the
  // radius for the robot).
  std::optional<std::filesystem::path> scenario;
  std::optional<std::filesystem::path> policy;
  std::vector<double> start;
  int runs = 20;
  int steps = 100;
  double success_radius = 0.2;
  std::uint64_t seed = 0;
};
int run_eval(const EvalOptions& opts);

}  // namespace klio::cli
