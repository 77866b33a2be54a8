#include "klio/foc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "klio/errors.hpp"

namespace klio {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

// log(sum exp(v_i)) with max-shift; -inf when every term is -inf.
double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  double m = kNegInf;
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, v[i]);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] == kNegInf) continue;
    acc += std::exp(v[i] - m);
  }
  return m + std::log(acc);
}

// Softmax of a logit row; -inf logits get exact zeros.
Eigen::RowVectorXd softmax_row(const Eigen::Ref<const Eigen::RowVectorXd>& logits) {
  const double lse = log_sum_exp(logits);
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(logits.size());
  if (lse == kNegInf) return out;  // caller decides whether this is an error
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (logits[i] == kNegInf) continue;
    out[i] = std::exp(logits[i] - lse);
    total += out[i];
  }
  out /= total;
  return out;
}

// KL(p_row || q_row) for every (state, action) row; +inf marks support
// violations. Only used inside this module; +inf never leaves in results.
Eigen::MatrixXd kl_row_table(const TransitionKernel& target,
                             const TransitionKernel& reference, int k) {
  const auto& p = target.table_at_step(k);
  const auto& q = reference.table_at_step(k);
  const std::int64_t n_states = target.n_states();
  const std::int64_t n_actions = target.n_actions();
  Eigen::MatrixXd out(n_states, n_actions);
  for (std::int64_t x = 0; x < n_states; ++x) {
    for (std::int64_t u = 0; u < n_actions; ++u) {
      const std::int64_t r = x * n_actions + u;
      const KlValue kl = kl_mass(p.row(r).transpose(), q.row(r).transpose());
      out(x, u) = kl.infinite ? kPosInf : kl.value;
    }
  }
  return out;
}

// E_{p_row}[f] arranged as S x A.
Eigen::MatrixXd expected_over_rows(const Eigen::MatrixXd& table,
                                   const Eigen::VectorXd& f, std::int64_t n_states,
                                   std::int64_t n_actions) {
  Eigen::VectorXd flat = table * f;
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(flat.data(), n_states,
                                                          n_actions);
}

Eigen::MatrixXd log_matrix(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out(r, c) = m(r, c) > 0.0 ? std::log(m(r, c)) : kNegInf;
  return out;
}

}  // namespace

void ControlProblem::validate() const {
  if (horizon < 1) throw ValidationError("control problem needs horizon >= 1");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  const auto& sg = target.state_grid();
  const auto& ag = target.action_grid();
  if (!sg->same_geometry(*reference_dynamics.state_grid()) ||
      !ag->same_geometry(*reference_dynamics.action_grid()))
    throw ValidationError("target and reference dynamics grids differ");
  if (!sg->same_geometry(*reference_policy.state_grid()) ||
      !ag->same_geometry(*reference_policy.action_grid()))
    throw ValidationError("reference policy grids differ from dynamics grids");
  if (!sg->same_geometry(*prior.grid()))
    throw ValidationError("prior lives on a different state grid");
  auto check_steps = [&](int steps, const char* what) {
    if (steps != 1 && steps != horizon)
      throw ValidationError(std::string(what) +
                            " must be stationary or provide one table per step");
  };
  check_steps(target.steps(), "target kernel");
  check_steps(reference_dynamics.steps(), "reference dynamics");
  check_steps(reference_policy.steps(), "reference policy");
  check_steps(static_cast<int>(stage_costs.size()), "stage costs");
  for (const auto& c : stage_costs) {
    if (c.size() != sg->size()) throw ValidationError("stage cost size mismatch");
    if (!c.allFinite()) throw ValidationError("stage costs must be finite");
  }
}

const Eigen::VectorXd& ControlProblem::cost_at_step(int k) const {
  if (stage_costs.size() == 1) return stage_costs[0];
  if (k < 1 || k > static_cast<int>(stage_costs.size()))
    throw ValidationError("cost step out of range");
  return stage_costs[static_cast<size_t>(k - 1)];
}

BackwardTables backward_recursion(const ControlProblem& prob) {
  prob.validate();
  const int n = prob.horizon;
  const std::int64_t n_states = prob.target.n_states();
  const std::int64_t n_actions = prob.target.n_actions();

  BackwardTables t;
  t.hat_c.assign(static_cast<size_t>(n) + 1, Eigen::VectorXd::Zero(n_states));
  t.bar_c.resize(static_cast<size_t>(n));
  t.kl.resize(static_cast<size_t>(n));
  t.log_p_bar.resize(static_cast<size_t>(n));
  t.p_bar.resize(static_cast<size_t>(n));
  t.expected_bar_c.resize(static_cast<size_t>(n));

  const bool shared_kl =
      prob.target.is_stationary() && prob.reference_dynamics.is_stationary();
  Eigen::MatrixXd kl_shared;
  if (shared_kl) kl_shared = kl_row_table(prob.target, prob.reference_dynamics, 1);

  for (int k = n; k >= 1; --k) {
    const size_t i = static_cast<size_t>(k - 1);
    t.kl[i] = shared_kl ? kl_shared : kl_row_table(prob.target, prob.reference_dynamics, k);
    t.bar_c[i] =
        prob.cost_at_step(k) / prob.epsilon - t.hat_c[static_cast<size_t>(k)];
    t.expected_bar_c[i] = expected_over_rows(prob.target.table_at_step(k),
                                             t.bar_c[i], n_states, n_actions);

    const Eigen::MatrixXd log_q_u = log_matrix(prob.reference_policy.table_at_step(k));
    t.log_p_bar[i] = log_q_u - t.kl[i];  // -inf propagates where excluded
    t.p_bar[i] = t.log_p_bar[i].unaryExpr(
        [](double v) { return v == kNegInf ? 0.0 : std::exp(v); });

    Eigen::VectorXd& hat_prev = t.hat_c[static_cast<size_t>(k - 1)];
    hat_prev.resize(n_states);
    for (std::int64_t x = 0; x < n_states; ++x) {
      const Eigen::RowVectorXd logits =
          t.log_p_bar[i].row(x) - t.expected_bar_c[i].row(x);
      const double lse = log_sum_exp(logits);
      if (lse == kNegInf)
        throw NumericalError(
            "backward recursion: no admissible action at state " +
            std::to_string(x) + ", step " + std::to_string(k));
      hat_prev[x] = lse;
    }
  }
  return t;
}

PolicyKernel optimal_policy(const ControlProblem& prob, const BackwardTables& tables) {
  prob.validate();
  const int n = prob.horizon;
  if (static_cast<int>(tables.log_p_bar.size()) != n)
    throw ValidationError("backward tables do not match the problem horizon");
  const std::int64_t n_states = prob.target.n_states();

  std::vector<Eigen::MatrixXd> steps;
  steps.reserve(static_cast<size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const size_t i = static_cast<size_t>(k - 1);
    Eigen::MatrixXd table(n_states, prob.target.n_actions());
    for (std::int64_t x = 0; x < n_states; ++x) {
      const Eigen::RowVectorXd logits =
          tables.log_p_bar[i].row(x) - tables.expected_bar_c[i].row(x);
      if (log_sum_exp(logits) == kNegInf)
        throw NumericalError("optimal policy: unnormalizable row at state " +
                             std::to_string(x) + ", step " + std::to_string(k));
      table.row(x) = softmax_row(logits);
    }
    steps.push_back(std::move(table));
  }
  return PolicyKernel(prob.target.state_grid(), prob.target.action_grid(),
                      std::move(steps));
}

PolicyKernel uniform_reference_policy(const ControlProblem& prob) {
  prob.validate();
  const std::int64_t n_states = prob.target.n_states();
  const std::int64_t n_actions = prob.target.n_actions();
  for (int k = 1; k <= prob.horizon; ++k) {
    const auto& qx = prob.reference_dynamics.table_at_step(k);
    const auto& qu = prob.reference_policy.table_at_step(k);
    const double want_x = 1.0 / static_cast<double>(n_states);
    const double want_u = 1.0 / static_cast<double>(n_actions);
    if ((qx.array() - want_x).abs().maxCoeff() > 1e-14 ||
        (qu.array() - want_u).abs().maxCoeff() > 1e-14)
      throw ValidationError("uniform_reference_policy needs uniform references");
    if (prob.reference_dynamics.is_stationary() && prob.reference_policy.is_stationary())
      break;
  }

  const int n = prob.horizon;
  // E_p[ln p] per row (0 ln 0 = 0): the negative entropy replaces the KL term.
  auto neg_entropy = [&](int k) {
    const auto& p = prob.target.table_at_step(k);
    Eigen::MatrixXd out(n_states, n_actions);
    for (std::int64_t x = 0; x < n_states; ++x) {
      for (std::int64_t u = 0; u < n_actions; ++u) {
        const auto row = p.row(x * n_actions + u);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < row.size(); ++j)
          if (row[j] > 0.0) acc += row[j] * std::log(row[j]);
        out(x, u) = acc;
      }
    }
    return out;
  };

  std::vector<Eigen::MatrixXd> logits_per_step(static_cast<size_t>(n));
  Eigen::VectorXd hat_c = Eigen::VectorXd::Zero(n_states);
  for (int k = n; k >= 1; --k) {
    const size_t i = static_cast<size_t>(k - 1);
    const Eigen::VectorXd bar_c = prob.cost_at_step(k) / prob.epsilon - hat_c;
    const Eigen::MatrixXd expected = expected_over_rows(
        prob.target.table_at_step(k), bar_c, n_states, n_actions);
    logits_per_step[i] = -(neg_entropy(k) + expected);
    Eigen::VectorXd hat_prev(n_states);
    for (std::int64_t x = 0; x < n_states; ++x)
      hat_prev[x] = log_sum_exp(logits_per_step[i].row(x));
    hat_c = std::move(hat_prev);
  }

  std::vector<Eigen::MatrixXd> steps;
  steps.reserve(static_cast<size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const size_t i = static_cast<size_t>(k - 1);
    Eigen::MatrixXd table(n_states, n_actions);
    for (std::int64_t x = 0; x < n_states; ++x)
      table.row(x) = softmax_row(logits_per_step[i].row(x));
    steps.push_back(std::move(table));
  }
  return PolicyKernel(prob.target.state_grid(), prob.target.action_grid(),
                      std::move(steps));
}

double optimal_cost(const ControlProblem& prob, const BackwardTables& tables) {
  if (tables.hat_c.empty() ||
      tables.hat_c[0].size() != prob.prior.mass().size())
    throw ValidationError("backward tables do not match the problem");
  return -prob.epsilon * prob.prior.mass().dot(tables.hat_c[0]);
}

KlValue problem_functional(const ControlProblem& prob, const PolicyKernel& policy) {
  prob.validate();
  const std::int64_t n_states = prob.target.n_states();
  const std::int64_t n_actions = prob.target.n_actions();

  Eigen::VectorXd marginal = prob.prior.mass();
  double total = 0.0;
  for (int k = 1; k <= prob.horizon; ++k) {
    const auto& pi = policy.table_at_step(k);
    const auto& p_table = prob.target.table_at_step(k);
    const auto& q_table = prob.reference_dynamics.table_at_step(k);
    const auto& q_u = prob.reference_policy.table_at_step(k);
    const Eigen::VectorXd& cost = prob.cost_at_step(k);

    Eigen::VectorXd next = Eigen::VectorXd::Zero(n_states);
    for (std::int64_t x = 0; x < n_states; ++x) {
      if (marginal[x] == 0.0) continue;
      const KlValue policy_kl =
          kl_mass(pi.row(x).transpose(), q_u.row(x).transpose());
      if (policy_kl.infinite) return KlValue::infinity();
      double stage = prob.epsilon * policy_kl.value;
      for (std::int64_t u = 0; u < n_actions; ++u) {
        const double w = pi(x, u);
        if (w == 0.0) continue;
        const std::int64_t r = x * n_actions + u;
        const KlValue dyn_kl =
            kl_mass(p_table.row(r).transpose(), q_table.row(r).transpose());
        if (dyn_kl.infinite) return KlValue::infinity();
        stage += w * (prob.epsilon * dyn_kl.value + p_table.row(r).dot(cost));
        next += marginal[x] * w * p_table.row(r).transpose();
      }
      total += marginal[x] * stage;
    }
    marginal = std::move(next);
  }
  return KlValue::finite(total);
}

std::vector<Eigen::VectorXd> closed_loop_marginals(const ControlProblem& prob,
                                                   const PolicyKernel& policy) {
  prob.validate();
  const std::int64_t n_states = prob.target.n_states();
  const std::int64_t n_actions = prob.target.n_actions();
  std::vector<Eigen::VectorXd> marginals;
  marginals.reserve(static_cast<size_t>(prob.horizon) + 1);
  marginals.push_back(prob.prior.mass());
  for (int k = 1; k <= prob.horizon; ++k) {
    const auto& pi = policy.table_at_step(k);
    const auto& p_table = prob.target.table_at_step(k);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n_states);
    const Eigen::VectorXd& prev = marginals.back();
    for (std::int64_t x = 0; x < n_states; ++x) {
      if (prev[x] == 0.0) continue;
      for (std::int64_t u = 0; u < n_actions; ++u) {
        const double w = prev[x] * pi(x, u);
        if (w == 0.0) continue;
        next += w * p_table.row(x * n_actions + u).transpose();
      }
    }
    marginals.push_back(std::move(next));
  }
  return marginals;
}

TwistedReference twisted_reference(const ControlProblem& prob) {
  prob.validate();
  const int n = prob.horizon;
  const std::int64_t n_states = prob.target.n_states();
  const std::int64_t n_actions = prob.target.n_actions();

  TwistedReference out;
  out.dynamics.resize(static_cast<size_t>(n));
  out.policy.resize(static_cast<size_t>(n));

  // Backward messages in log scale: log_beta over next states.
  Eigen::VectorXd log_beta = Eigen::VectorXd::Zero(n_states);
  for (int k = n; k >= 1; --k) {
    const size_t i = static_cast<size_t>(k - 1);
    const auto& q_table = prob.reference_dynamics.table_at_step(k);
    const auto& q_u = prob.reference_policy.table_at_step(k);
    // Expected stage cost ctilde_k(x, u) under the target row (scaled by eps).
    const Eigen::MatrixXd ctilde = expected_over_rows(
        prob.target.table_at_step(k), prob.cost_at_step(k) / prob.epsilon,
        n_states, n_actions);

    Eigen::MatrixXd log_gamma(n_states, n_actions);  // ln sum_x' q(x'|x,u) beta(x')
    out.dynamics[i].resize(n_states * n_actions, n_states);
    for (std::int64_t x = 0; x < n_states; ++x) {
      for (std::int64_t u = 0; u < n_actions; ++u) {
        const std::int64_t r = x * n_actions + u;
        Eigen::RowVectorXd terms(n_states);
        for (std::int64_t x2 = 0; x2 < n_states; ++x2)
          terms[x2] = q_table(r, x2) > 0.0 ? std::log(q_table(r, x2)) + log_beta[x2]
                                           : kNegInf;
        const double lg = log_sum_exp(terms);
        log_gamma(x, u) = lg;
        for (std::int64_t x2 = 0; x2 < n_states; ++x2)
          out.dynamics[i](r, x2) =
              terms[x2] == kNegInf ? 0.0 : std::exp(terms[x2] - lg);
      }
    }

    Eigen::VectorXd log_beta_prev(n_states);
    out.policy[i].resize(n_states, n_actions);
    for (std::int64_t x = 0; x < n_states; ++x) {
      Eigen::RowVectorXd terms(n_actions);
      for (std::int64_t u = 0; u < n_actions; ++u)
        terms[u] = q_u(x, u) > 0.0
                       ? std::log(q_u(x, u)) - ctilde(x, u) + log_gamma(x, u)
                       : kNegInf;
      const double lb = log_sum_exp(terms);
      log_beta_prev[x] = lb;
      for (std::int64_t u = 0; u < n_actions; ++u)
        out.policy[i](x, u) = terms[u] == kNegInf ? 0.0 : std::exp(terms[u] - lb);
    }
    log_beta = std::move(log_beta_prev);
  }

  Eigen::RowVectorXd prior_terms(n_states);
  for (std::int64_t x = 0; x < n_states; ++x)
    prior_terms[x] = prob.prior(x) > 0.0 ? std::log(prob.prior(x)) + log_beta[x]
                                         : kNegInf;
  out.log_normalizer = log_sum_exp(prior_terms);
  out.prior.resize(n_states);
  for (std::int64_t x = 0; x < n_states; ++x)
    out.prior[x] = prior_terms[x] == kNegInf
                       ? 0.0
                       : std::exp(prior_terms[x] - out.log_normalizer);
  return out;
}

BoundednessReport check_boundedness(const ControlProblem& prob) {
  const TwistedReference twisted = twisted_reference(prob);
  const std::int64_t n_states = prob.target.n_states();
  const std::int64_t n_actions = prob.target.n_actions();

  BoundednessReport report;
  report.log_e_bar = twisted.log_normalizer;
  report.e_bar = std::exp(twisted.log_normalizer);
  report.kl_bounds.assign(static_cast<size_t>(prob.horizon) + 1, 0.0);
  report.bounded = true;

  const KlValue h0 = kl_mass(prob.prior.mass(), twisted.prior);
  if (h0.infinite) {
    report.kl_bounds[0] = kPosInf;
    report.bounded = false;
    report.diagnostic = "prior has mass outside the twisted prior support";
  } else {
    report.kl_bounds[0] = h0.value;
  }

  for (int k = 1; k <= prob.horizon; ++k) {
    const auto& p_table = prob.target.table_at_step(k);
    const auto& qt = twisted.dynamics[static_cast<size_t>(k - 1)];
    double h = 0.0;
    for (std::int64_t x = 0; x < n_states && report.bounded; ++x) {
      for (std::int64_t u = 0; u < n_actions; ++u) {
        const std::int64_t r = x * n_actions + u;
        const KlValue kl = kl_mass(p_table.row(r).transpose(), qt.row(r).transpose());
        if (kl.infinite) {
          h = kPosInf;
          report.bounded = false;
          report.diagnostic = "target row (state " + std::to_string(x) +
                              ", action " + std::to_string(u) + ", step " +
                              std::to_string(k) +
                              ") has mass outside the twisted dynamics support";
          break;
        }
        h = std::max(h, kl.value);
      }
    }
    report.kl_bounds[static_cast<size_t>(k)] = h;
  }

  report.lower = -prob.epsilon * report.e_bar;
  if (report.bounded) {
    double sum_h = 0.0;
    for (double h : report.kl_bounds) sum_h += h;
    report.upper = prob.epsilon * (sum_h - report.log_e_bar);
  } else {
    report.upper = kPosInf;
    if (report.diagnostic.empty()) report.diagnostic = "unbounded stage KL";
  }
  return report;
}

Dataset rollout(const ControlProblem& prob, const PolicyKernel& policy,
                std::int64_t x0_cell, Rng& rng, int steps) {
  prob.validate();
  if (steps < 1) throw ValidationError("rollout needs steps >= 1");
  if (!policy.is_stationary() && steps > policy.steps())
    throw ValidationError("rollout longer than the policy horizon");
  if (!prob.target.is_stationary() && steps > prob.target.steps())
    throw ValidationError("rollout longer than the target kernel horizon");
  if (x0_cell < 0 || x0_cell >= prob.target.n_states())
    throw ValidationError("rollout start cell out of range");

  const auto& state_grid = *prob.target.state_grid();
  const auto& action_grid = *prob.target.action_grid();
  Dataset ds;
  std::int64_t x = x0_cell;
  for (int k = 1; k <= steps; ++k) {
    const int pk = policy.is_stationary() ? 1 : k;
    const int tk = prob.target.is_stationary() ? 1 : k;
    const std::int64_t u = sample_mass(policy.table_at_step(pk).row(x).transpose(), rng);
    StepRecord rec;
    rec.k = k;
    rec.x_prev = state_grid.center(x);
    rec.u = action_grid.center(u);
    ds.pairs.push_back(std::move(rec));
    x = sample_mass(
        prob.target.table_at_step(tk).row(prob.target.row_index(x, u)).transpose(),
        rng);
  }
  ds.terminal = state_grid.center(x);
  return ds;
}

}  // namespace klio
