#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "klio/distribution.hpp"
#include "klio/grid.hpp"
#include "klio/kernel.hpp"

namespace klio {

// Structured-text serialization. The schema is documented in
// docs/formats.md; values are written with 17 significant digits so that
// write -> read is lossless for doubles. Malformed input raises
// ValidationError mentioning the offending line.

std::string format_double(double v);

void write_grid(std::ostream& os, const GridSpace& grid);

void save_distribution(const DiscreteDistribution& d, const std::filesystem::path& p);
DiscreteDistribution load_distribution(const std::filesystem::path& p);

void save_transition_kernel(const TransitionKernel& k, const std::filesystem::path& p);
TransitionKernel load_transition_kernel(const std::filesystem::path& p);

void save_policy_kernel(const PolicyKernel& k, const std::filesystem::path& p);
PolicyKernel load_policy_kernel(const std::filesystem::path& p);

// Stage-cost tables over state cells; one table when stationary, else one
// per step.
struct CostTable {
  GridPtr grid;
  std::vector<Eigen::VectorXd> stages;  // size 1 == stationary
};
void save_cost_table(const CostTable& c, const std::filesystem::path& p);
CostTable load_cost_table(const std::filesystem::path& p);

void save_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& p);
Eigen::MatrixXd load_matrix(const std::filesystem::path& p);

struct WeightsFile {
  Eigen::VectorXd weights;
  std::string status;
  double objective = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};
void save_weights(const WeightsFile& w, const std::filesystem::path& p);
WeightsFile load_weights(const std::filesystem::path& p);

}  // namespace klio
