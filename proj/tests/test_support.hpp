#pragma once

// Shared generators and independent oracles for the test suites. Everything
// here stays deliberately naive (exhaustive enumeration, projected gradient
// on the simplex) so it cannot share a failure mode with the library code it
// checks.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "klio/foc.hpp"
#include "klio/kernel.hpp"
#include "klio/rng.hpp"

namespace klio::testing {

inline Eigen::VectorXd random_simplex(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = -std::log(1.0 - uniform01(rng));
  return v / v.sum();
}

inline GridPtr toy_grid(int cells) {
  return make_grid({AxisSpec{0.0, static_cast<double>(cells), cells, false}});
}

inline DiscreteDistribution random_distribution(Rng& rng, const GridPtr& grid) {
  return DiscreteDistribution(grid, random_simplex(rng, grid->size()));
}

inline TransitionKernel random_transition(Rng& rng, const GridPtr& sg,
                                          const GridPtr& ag) {
  Eigen::MatrixXd table(sg->size() * ag->size(), sg->size());
  for (Eigen::Index r = 0; r < table.rows(); ++r)
    table.row(r) = random_simplex(rng, sg->size()).transpose();
  return TransitionKernel::stationary(sg, ag, std::move(table));
}

inline PolicyKernel random_policy(Rng& rng, const GridPtr& sg, const GridPtr& ag,
                                  int steps = 1) {
  std::vector<Eigen::MatrixXd> tables;
  for (int k = 0; k < steps; ++k) {
    Eigen::MatrixXd t(sg->size(), ag->size());
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      t.row(r) = random_simplex(rng, ag->size()).transpose();
    tables.push_back(std::move(t));
  }
  return PolicyKernel(sg, ag, std::move(tables));
}

inline ControlProblem random_problem(Rng& rng, int states, int actions, int horizon,
                                     double cost_scale = 1.0) {
  auto sg = toy_grid(states);
  auto ag = toy_grid(actions);
  ControlProblem prob{
      horizon,
      random_transition(rng, sg, ag),
      random_distribution(rng, sg),
      random_transition(rng, sg, ag),
      random_policy(rng, sg, ag),
      {},
      1.0};
  for (int k = 0; k < horizon; ++k) {
    Eigen::VectorXd c(states);
    for (int s = 0; s < states; ++s) c[s] = cost_scale * uniform01(rng);
    prob.stage_costs.push_back(std::move(c));
  }
  return prob;
}

// Problem functional by exhaustive enumeration of every trajectory
// (x_0, u_1, x_1, ..., u_N, x_N). Independent of the library's forward
// propagation.
inline KlValue enumerate_functional(const ControlProblem& prob,
                                    const PolicyKernel& policy) {
  const std::int64_t S = prob.target.n_states();
  const std::int64_t A = prob.target.n_actions();
  const int N = prob.horizon;

  double total = 0.0;

  struct Frame {
    std::int64_t x;
    double p;       // closed-loop probability of the prefix
    double log_pq;  // accumulated ln(p/q) of the prefix
    double cost;    // accumulated stage costs of the prefix
  };

  // Depth-first over steps; recursion kept explicit by (step, frame) pairs.
  std::vector<std::pair<int, Frame>> work;
  for (std::int64_t x0 = 0; x0 < S; ++x0)
    if (prob.prior(x0) > 0.0) work.push_back({1, {x0, prob.prior(x0), 0.0, 0.0}});

  while (!work.empty()) {
    auto [k, f] = work.back();
    work.pop_back();
    if (k > N) {
      total += f.p * (prob.epsilon * f.log_pq + f.cost);
      continue;
    }
    const auto& pi = policy.table_at_step(k);
    const auto& p_table = prob.target.table_at_step(k);
    const auto& q_table = prob.reference_dynamics.table_at_step(k);
    const auto& q_u = prob.reference_policy.table_at_step(k);
    const Eigen::VectorXd& c = prob.cost_at_step(k);
    for (std::int64_t u = 0; u < A; ++u) {
      const double pu = pi(f.x, u);
      if (pu == 0.0) continue;
      if (q_u(f.x, u) == 0.0) return KlValue::infinity();
      const std::int64_t r = f.x * A + u;
      for (std::int64_t x2 = 0; x2 < S; ++x2) {
        const double px = p_table(r, x2);
        if (px == 0.0) continue;
        if (q_table(r, x2) == 0.0) return KlValue::infinity();
        Frame g;
        g.x = x2;
        g.p = f.p * pu * px;
        g.log_pq = f.log_pq + std::log(pu / q_u(f.x, u)) +
                   std::log(px / q_table(r, x2));
        g.cost = f.cost + c[x2];
        work.push_back({k + 1, g});
      }
    }
  }
  return KlValue::finite(total);
}

// Euclidean projection onto the probability simplex restricted to a support
// mask (zero entries stay zero).
inline Eigen::VectorXd project_simplex(Eigen::VectorXd v,
                                       const std::vector<bool>& support) {
  std::vector<double> vals;
  for (size_t i = 0; i < support.size(); ++i)
    if (support[i]) vals.push_back(v[static_cast<Eigen::Index>(i)]);
  std::sort(vals.begin(), vals.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  int rho = 0;
  for (size_t j = 0; j < vals.size(); ++j) {
    cum += vals[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (vals[j] - t > 0.0) {
      rho = static_cast<int>(j + 1);
      tau = t;
    }
  }
  (void)rho;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (size_t i = 0; i < support.size(); ++i)
    if (support[i])
      out[static_cast<Eigen::Index>(i)] =
          std::max(0.0, v[static_cast<Eigen::Index>(i)] - tau);
  return out;
}

// Per-state policy-row oracle: numerically minimize
//   sum_u pi(u) [eps*(D(x,u) + E_p[bar_c]) ] + eps*KL(pi || q_u(.|x))
// over the simplex by projected gradient with restarts. The stage objective
// whose pointwise minimum the softmax formula claims to be.
inline Eigen::VectorXd minimize_policy_row(const Eigen::VectorXd& stage_score,
                                           const Eigen::VectorXd& q_row, Rng& rng,
                                           int restarts = 4, int iters = 4000) {
  const Eigen::Index A = q_row.size();
  std::vector<bool> support(static_cast<size_t>(A));
  for (Eigen::Index u = 0; u < A; ++u)
    support[static_cast<size_t>(u)] =
        q_row[u] > 0.0 && std::isfinite(stage_score[u]);

  auto objective = [&](const Eigen::VectorXd& pi, Eigen::VectorXd* grad) {
    double val = 0.0;
    if (grad) grad->setZero(A);
    for (Eigen::Index u = 0; u < A; ++u) {
      if (!support[static_cast<size_t>(u)]) continue;
      const double w = pi[u];
      if (w <= 0.0) {
        if (grad) (*grad)[u] = stage_score[u] + std::log(1e-300 / q_row[u]) + 1.0;
        continue;
      }
      val += w * stage_score[u] + w * std::log(w / q_row[u]);
      if (grad) (*grad)[u] = stage_score[u] + std::log(w / q_row[u]) + 1.0;
    }
    return val;
  };

  Eigen::VectorXd best;
  double best_val = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd pi(A);
    for (Eigen::Index u = 0; u < A; ++u)
      pi[u] = support[static_cast<size_t>(u)] ? -std::log(1.0 - uniform01(rng)) : 0.0;
    pi = project_simplex(pi, support);
    double step = 0.5;
    Eigen::VectorXd grad(A);
    double val = objective(pi, &grad);
    for (int it = 0; it < iters; ++it) {
      Eigen::VectorXd cand = project_simplex(pi - step * grad, support);
      const double cand_val = objective(cand, nullptr);
      if (cand_val <= val) {
        pi = std::move(cand);
        val = objective(pi, &grad);
        step *= 1.05;
      } else {
        step *= 0.5;
        if (step < 1e-16) break;
      }
    }
    if (val < best_val) {
      best_val = val;
      best = pi;
    }
  }
  return best;
}

inline double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace klio::testing
