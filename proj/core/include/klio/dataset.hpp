#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

namespace klio {

// One observed pair: the state the system was in and the input then applied.
struct StepRecord {
  int k = 0;                // 1-based time index
  Eigen::VectorXd x_prev;   // x_{k-1}
  Eigen::VectorXd u;        // u_k
};

// Ordered pairs for k = 1..N plus the terminal state x_N. Continuous-valued;
// discretization happens at estimation time.
struct Dataset {
  std::vector<StepRecord> pairs;
  Eigen::VectorXd terminal;

  int state_dim() const { return static_cast<int>(terminal.size()); }
  int input_dim() const {
    return pairs.empty() ? 0 : static_cast<int>(pairs.front().u.size());
  }
  // The state the pair at `index` transitioned into.
  const Eigen::VectorXd& next_state(size_t index) const {
    return index + 1 < pairs.size() ? pairs[index + 1].x_prev : terminal;
  }
  void validate() const;
};

using Database = std::vector<Dataset>;

// Delimited text, one record per line: k then state coordinates then input
// coordinates; the final line carries only the terminal state. See
// docs/formats.md.
void save_dataset(const Dataset& ds, const std::filesystem::path& p);
Dataset load_dataset(const std::filesystem::path& p);

// Drops pairs whose consecutive values along `axis` jump by more than
// `threshold` (wrap discontinuities); kept pairs are renumbered 1..M.
Dataset filter_jump_discontinuities(const Dataset& ds, int axis,
                                    double threshold);

}  // namespace klio
