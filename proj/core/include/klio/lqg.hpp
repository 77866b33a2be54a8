#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "klio/rng.hpp"

namespace klio {

// Linear dynamics x_k ~ N(A x_{k-1} + B u_k, Sigma) with Gaussian references
// q^(x) = N(x_d, R), q^(u) = N(u_d, Q) and quadratic stage cost
// 0.5 (x - cost_center)^T W (x - cost_center); cost_center defaults to x_d.
struct GaussianLinearModel {
  Eigen::MatrixXd A, B;
  Eigen::MatrixXd sigma;  // process covariance, PD
  Eigen::MatrixXd W;      // cost weight, PSD
  Eigen::MatrixXd R, Q;   // reference covariances, PD
  Eigen::VectorXd x_d, u_d;
  Eigen::VectorXd cost_center;  // empty = x_d
  int horizon = 1;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  const Eigen::VectorXd& cost_point() const {
    return cost_center.size() ? cost_center : x_d;
  }
  void validate() const;
};

// Quadratic cost-to-go correction hat_c_k(x) = -0.5 x^T S x + lin^T x +
// log_const, plus the pieces of the policy at step k. S_N = 0 and the
// terminal policy uses S_bar_N = R^{-1} + W.
struct LqgStep {
  Eigen::MatrixXd S;           // S_k (PSD)
  Eigen::MatrixXd S_bar;       // S_k + R^{-1} + W (steps 1..N)
  Eigen::MatrixXd sigma_star;  // policy covariance (steps 1..N)
  Eigen::MatrixXd gain;        // mu* = -gain * x_{k-1} + offset
  Eigen::VectorXd offset;
  Eigen::VectorXd lin;         // linear coefficient of hat_c_k
  double log_const = 0.0;      // constant coefficient of hat_c_k
  double omega = 0.0;          // -2 * log_const; never read by the policy
};

struct LqgRecursion {
  std::vector<LqgStep> steps;  // index k = 0..N
  const LqgStep& at(int k) const { return steps[static_cast<size_t>(k)]; }
};

LqgRecursion lqg_recursion(const GaussianLinearModel& model);

struct GaussianPolicy {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

// Optimal policy at step k (1..N) given the previous state.
GaussianPolicy lqg_policy(const GaussianLinearModel& model, const LqgRecursion& rec,
                          int k, const Eigen::VectorXd& x_prev);

// Optimal value of the problem functional started at x0 (= -hat_c_0(x0)).
double lqg_value(const GaussianLinearModel& model, const LqgRecursion& rec,
                 const Eigen::VectorXd& x0);

// E_{p(.|x,u)}[hat_c_k]: the expected cost-to-go correction after applying u
// in state x (exposes the omega/log_const bookkeeping for tests).
double lqg_expected_correction(const GaussianLinearModel& model,
                               const LqgRecursion& rec, int k,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& u);

Eigen::VectorXd sample_gaussian(const GaussianPolicy& g, Rng& rng);

void save_gaussian_model(const GaussianLinearModel& m, const std::filesystem::path& p);
GaussianLinearModel load_gaussian_model(const std::filesystem::path& p);

}  // namespace klio
