#pragma once

#include <Eigen/Dense>
#include <vector>

#include "klio/distribution.hpp"
#include "klio/features.hpp"
#include "klio/kernel.hpp"
#include "klio/solver.hpp"

namespace klio {

enum class WeightMode { kStationary, kPerStep };
enum class WeightConstraint { kNone, kNonpositive };

struct IocObservation {
  std::int64_t state_cell = 0;   // x_{k-1}
  std::int64_t action_cell = 0;  // u_k
};

// Maximum-likelihood cost reconstruction from observed (state, action)
// pairs generated by the greedy softmax policy.
struct IocProblem {
  std::vector<IocObservation> observations;
  TransitionKernel target;              // p^(x)
  TransitionKernel reference_dynamics;  // q^(x)
  PolicyKernel reference_policy;        // q^(u)
  FeatureBasis basis;
  WeightMode mode = WeightMode::kStationary;
  WeightConstraint constraint = WeightConstraint::kNone;
  double ridge = 0.0;  // optional Tikhonov term, 0 keeps the pure ML estimate

  void validate() const;
};

// qhat(x_k-1, u) = q^(u)(u|x) exp(-KL(p_row || q_row)) per observation and
// action; zero exactly where the reference excludes the action or the KL is
// infinite.
struct ModifiedControlTable {
  Eigen::MatrixXd log_q_hat;  // M x A, -inf at zeros
  Eigen::MatrixXd q_hat;      // M x A
};
ModifiedControlTable modified_control(const IocProblem& prob);

// Everything the likelihood needs, decoupled from where it came from (the
// tabular path below fills it from kernels; the Gaussian scenarios fill it
// from closed forms).
struct IocTables {
  Eigen::MatrixXd log_q_hat;         // M x A
  std::vector<Eigen::MatrixXd> phi;  // per observation: A x F, phi = E_p[h]
  Eigen::VectorXi observed_action;   // M
  int feature_count = 0;

  std::int64_t observations() const { return log_q_hat.rows(); }
  void validate() const;
};
IocTables assemble_tables(const IocProblem& prob);

// Negative log-likelihood with its gradient; the w-independent
// -ln qhat(x, u_obs) terms are dropped (their sum is reported separately by
// fit()). Stationary mode takes w in R^F, per-step mode the stacked R^{M F}.
double ioc_nll(const IocTables& tables, WeightMode mode, const Eigen::VectorXd& w,
               Eigen::VectorXd* grad);

// Softmax policy row over actions induced by a weight vector at observation
// index i (the greedy softmax family the data is assumed to follow).
Eigen::VectorXd induced_policy_row(const IocTables& tables, WeightMode mode,
                                   const Eigen::VectorXd& w, std::int64_t i);

// Feature indices whose expected value is constant across actions at every
// observation: softmax gauge directions the likelihood cannot identify.
std::vector<int> gauge_directions(const IocTables& tables, double tol = 1e-12);

struct IocFit {
  Eigen::VectorXd weights;
  SolveStatus status = SolveStatus::kAborted;
  double nll = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  // Sum of the dropped -ln qhat(x, u_obs) terms; nll + dropped_term is the
  // full negative log-likelihood.
  double dropped_term = 0.0;
  std::vector<int> gauge_features;  // flat directions detected in the basis
};
IocFit fit(const IocProblem& prob, const SolverConfig& config = {});
IocFit fit_tables(const IocTables& tables, WeightMode mode,
                  WeightConstraint constraint, double ridge,
                  const SolverConfig& config = {});

// c*(x) = -w^T h(x) on the grid; per-step mode returns one table per block.
Eigen::VectorXd reconstruct_cost(const FeatureBasis& basis, const GridSpace& grid,
                                 const Eigen::VectorXd& w);
std::vector<Eigen::VectorXd> reconstruct_cost_per_step(const FeatureBasis& basis,
                                                       const GridSpace& grid,
                                                       const Eigen::VectorXd& stacked,
                                                       int blocks);

// Shift both costs to be nonnegative, normalize each to unit mass, return
// KL(true || estimate). Infinite when the estimate has zero normalized mass
// where the true cost has some.
KlValue cost_discrepancy(const Eigen::VectorXd& c_true, const Eigen::VectorXd& c_est);

}  // namespace klio
