#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace klio {

struct SolverConfig {
  double gradient_tolerance = 1e-8;  // on the projected gradient norm
  int max_iterations = 500;
  double sufficient_decrease = 1e-4;  // Armijo constant
  double backtrack_factor = 0.5;
  int memory = 10;  // curvature pairs kept by the quasi-Newton update
  bool project_nonpositive = false;
  double divergence_norm = 1e6;  // iterate escape threshold

  void validate() const;
};

enum class SolveStatus { kConverged, kIterationLimit, kDiverged, kAborted };

const char* to_string(SolveStatus s);

struct SolveResult {
  Eigen::VectorXd x;
  SolveStatus status = SolveStatus::kAborted;
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;        // projected gradient norm at x
  std::vector<double> trace;         // objective per accepted iterate
  std::string message;
};

// Objective with gradient; `grad` may be null when only the value is needed.
using Objective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

// Limited-memory quasi-Newton descent with backtracking line search;
// projection onto the nonpositive orthant when configured. Smooth convex
// objectives converge to gradient_tolerance; unbounded-below directions are
// reported as kDiverged with the best iterate found.
SolveResult minimize(const Objective& f, Eigen::VectorXd x0,
                     const SolverConfig& config = {});

// Worst per-coordinate relative error between the analytic gradient and a
// central finite difference with the given step.
double gradient_check(const Objective& f, const Eigen::VectorXd& x, double step);

Eigen::VectorXd project_nonpositive_orthant(Eigen::VectorXd x);

}  // namespace klio
