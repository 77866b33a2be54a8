#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "klio/dataset.hpp"
#include "klio/distribution.hpp"
#include "klio/kernel.hpp"
#include "klio/rng.hpp"

namespace klio {

// Finite-horizon KL-regularized control problem: minimize over randomized
// policies
//
//   epsilon * KL(p_{0:N} || q_{0:N}) + sum_k E[ c_k(X_k) ]
//
// where p_{0:N} is the closed loop under the target dynamics and the policy,
// and q_{0:N} is the reference model. The prior doubles as the initial state
// law of both chains, so the constant KL(p_0 || q_0) term vanishes.
struct ControlProblem {
  int horizon = 1;                      // N >= 1
  TransitionKernel target;              // p^(x), per step or stationary
  DiscreteDistribution prior;           // q_0 (= p_0)
  TransitionKernel reference_dynamics;  // q^(x)
  PolicyKernel reference_policy;        // q^(u)
  std::vector<Eigen::VectorXd> stage_costs;  // size 1 (stationary) or N
  double epsilon = 1.0;

  void validate() const;
  const Eigen::VectorXd& cost_at_step(int k) const;
};

// Output of the backward recursion. Index conventions: hat_c[k] for
// k = 0..N with hat_c[N] = 0; per-step tables stored at [k-1] for k = 1..N.
// `kl` holds KL(p_row || q_row) per (state, action) with +inf marking
// absolute-continuity violations (confined to these tables; policies and
// costs built from them are finite). `log_p_bar` = ln q^(u) - kl is the
// modified prior in log scale, -inf exactly where the prior excludes the
// action or the KL is infinite.
struct BackwardTables {
  std::vector<Eigen::VectorXd> hat_c;           // N+1 entries
  std::vector<Eigen::VectorXd> bar_c;           // N entries, bar_c[k-1] = c_k/eps - hat_c[k]
  std::vector<Eigen::MatrixXd> kl;              // N entries, S x A
  std::vector<Eigen::MatrixXd> log_p_bar;       // N entries, S x A
  std::vector<Eigen::MatrixXd> p_bar;           // N entries, S x A (unnormalized)
  std::vector<Eigen::MatrixXd> expected_bar_c;  // N entries, S x A: E_p[bar_c_k]
};

BackwardTables backward_recursion(const ControlProblem& prob);

// Softmax policy p*_k(u|x) proportional to p_bar * exp(-E_p[bar_c_k]);
// zero exactly where the reference policy is zero or the row KL is infinite.
PolicyKernel optimal_policy(const ControlProblem& prob, const BackwardTables& tables);

// Special-cased recursion for uniform reference dynamics and policy; the KL
// regularizer reduces to an entropy term. Agrees with optimal_policy run on
// the explicit uniform references.
PolicyKernel uniform_reference_policy(const ControlProblem& prob);

// Optimal value of the problem functional, computed from one extra recursion
// step: -epsilon * E_{prior}[ hat_c_0 ]. Matches problem_functional at the
// optimal policy.
double optimal_cost(const ControlProblem& prob, const BackwardTables& tables);

// Direct evaluation of the problem functional at an arbitrary policy by
// forward propagation; infinite when the policy or dynamics violate absolute
// continuity on visited rows.
KlValue problem_functional(const ControlProblem& prob, const PolicyKernel& policy);

// Closed-loop state marginals p_k for k = 0..N under a policy.
std::vector<Eigen::VectorXd> closed_loop_marginals(const ControlProblem& prob,
                                                   const PolicyKernel& policy);

// Cost-reweighted (twisted) reference; the decomposition of
// q_{0:N} * exp(-sum_k ctilde_k) / Z into prior, dynamics and policy factors.
struct TwistedReference {
  Eigen::VectorXd prior;                  // qtilde_0
  std::vector<Eigen::MatrixXd> dynamics;  // per step, (S*A) x S
  std::vector<Eigen::MatrixXd> policy;    // per step, S x A
  double log_normalizer = 0.0;            // ln Z = ln E_q[exp(-sum ctilde)]
};
TwistedReference twisted_reference(const ControlProblem& prob);

// Boundedness diagnostic. H_k bound the stage KLs against the twisted
// reference, e_bar is the exhaustively evaluated exponential moment
// E_q[exp(-sum ctilde)]. lower = -epsilon * e_bar; the upper bound carries
// the -ln(e_bar) normalizer term: upper = epsilon * (sum H_k - ln e_bar).
// Both bracket the functional at the twisted reference policy.
struct BoundednessReport {
  std::vector<double> kl_bounds;  // H_0..H_N (H_k may be +inf)
  double e_bar = 0.0;
  double log_e_bar = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool bounded = false;
  std::string diagnostic;  // offending factor when not bounded
};
BoundednessReport check_boundedness(const ControlProblem& prob);

// Closed-loop sampling: u_k ~ policy, x_k ~ target row; recorded coordinates
// are cell centers. For non-stationary policies steps must not exceed the
// policy horizon.
Dataset rollout(const ControlProblem& prob, const PolicyKernel& policy,
                std::int64_t x0_cell, Rng& rng, int steps);

}  // namespace klio
