#include "klio/ioc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "klio/errors.hpp"

namespace klio {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp_row(const Eigen::RowVectorXd& v) {
  double m = kNegInf;
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, v[i]);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != kNegInf) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

}  // namespace

void IocProblem::validate() const {
  if (observations.empty()) throw ValidationError("ioc problem needs M >= 1 observations");
  if (basis.size() < 1) throw ValidationError("ioc problem needs a feature basis");
  const auto& sg = target.state_grid();
  const auto& ag = target.action_grid();
  if (!sg->same_geometry(*reference_dynamics.state_grid()) ||
      !ag->same_geometry(*reference_dynamics.action_grid()) ||
      !sg->same_geometry(*reference_policy.state_grid()) ||
      !ag->same_geometry(*reference_policy.action_grid()))
    throw ValidationError("ioc problem: kernels live on different grids");
  if (!target.is_stationary() || !reference_dynamics.is_stationary() ||
      !reference_policy.is_stationary())
    throw ValidationError("ioc problem expects stationary kernels");
  for (const auto& obs : observations) {
    if (obs.state_cell < 0 || obs.state_cell >= sg->size() ||
        obs.action_cell < 0 || obs.action_cell >= ag->size())
      throw ValidationError("ioc observation outside the grids");
  }
  if (ridge < 0.0) throw ValidationError("ridge must be >= 0");
}

ModifiedControlTable modified_control(const IocProblem& prob) {
  prob.validate();
  const std::int64_t m = static_cast<std::int64_t>(prob.observations.size());
  const std::int64_t n_actions = prob.target.n_actions();
  const auto& p_table = prob.target.table_at_step(1);
  const auto& q_table = prob.reference_dynamics.table_at_step(1);
  const auto& q_u = prob.reference_policy.table_at_step(1);

  ModifiedControlTable out;
  out.log_q_hat.resize(m, n_actions);
  for (std::int64_t i = 0; i < m; ++i) {
    const std::int64_t x = prob.observations[static_cast<size_t>(i)].state_cell;
    bool any_positive = false;
    for (std::int64_t u = 0; u < n_actions; ++u) {
      const std::int64_t r = x * n_actions + u;
      double value = kNegInf;
      if (q_u(x, u) > 0.0) {
        const KlValue kl =
            kl_mass(p_table.row(r).transpose(), q_table.row(r).transpose());
        if (!kl.infinite) {
          value = std::log(q_u(x, u)) - kl.value;
          any_positive = true;
        }
      }
      out.log_q_hat(i, u) = value;
    }
    if (!any_positive)
      throw NumericalError("modified control weights vanish for observation " +
                           std::to_string(i) + " (state cell " +
                           std::to_string(x) + ")");
  }
  out.q_hat = out.log_q_hat.unaryExpr(
      [](double v) { return v == kNegInf ? 0.0 : std::exp(v); });
  return out;
}

void IocTables::validate() const {
  const std::int64_t m = log_q_hat.rows();
  if (m < 1) throw ValidationError("ioc tables need M >= 1");
  if (static_cast<std::int64_t>(phi.size()) != m ||
      observed_action.size() != m)
    throw ValidationError("ioc tables: inconsistent observation count");
  for (std::int64_t i = 0; i < m; ++i) {
    const auto& p = phi[static_cast<size_t>(i)];
    if (p.rows() != log_q_hat.cols() || p.cols() != feature_count)
      throw ValidationError("ioc tables: phi block has wrong shape");
    const std::int64_t u = observed_action[i];
    if (u < 0 || u >= log_q_hat.cols())
      throw ValidationError("ioc tables: observed action out of range");
    if (log_q_hat(i, u) == kNegInf)
      throw NumericalError(
          "observed action has zero modified control weight at observation " +
          std::to_string(i) + "; the likelihood is degenerate");
  }
}

IocTables assemble_tables(const IocProblem& prob) {
  const ModifiedControlTable mc = modified_control(prob);
  const std::int64_t m = static_cast<std::int64_t>(prob.observations.size());
  const std::int64_t n_actions = prob.target.n_actions();
  const auto& p_table = prob.target.table_at_step(1);
  const Eigen::MatrixXd h = prob.basis.evaluate_on_grid(*prob.target.state_grid());

  IocTables tables;
  tables.log_q_hat = mc.log_q_hat;
  tables.feature_count = prob.basis.size();
  tables.observed_action.resize(m);
  tables.phi.reserve(static_cast<size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    const auto& obs = prob.observations[static_cast<size_t>(i)];
    tables.observed_action[i] = static_cast<int>(obs.action_cell);
    Eigen::MatrixXd block(n_actions, prob.basis.size());
    for (std::int64_t u = 0; u < n_actions; ++u)
      block.row(u) = p_table.row(obs.state_cell * n_actions + u) * h;
    tables.phi.push_back(std::move(block));
  }
  tables.validate();
  return tables;
}

double ioc_nll(const IocTables& tables, WeightMode mode, const Eigen::VectorXd& w,
               Eigen::VectorXd* grad) {
  const std::int64_t m = tables.observations();
  const std::int64_t n_actions = tables.log_q_hat.cols();
  const int f_count = tables.feature_count;
  if (mode == WeightMode::kStationary) {
    if (w.size() != f_count) throw ValidationError("weight vector must have F entries");
  } else if (w.size() != static_cast<std::int64_t>(f_count) * m) {
    throw ValidationError("stacked weights must have M*F entries");
  }

  if (grad) grad->setZero(w.size());
  double total = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    const Eigen::VectorXd w_block =
        mode == WeightMode::kStationary ? w : w.segment(i * f_count, f_count);
    const auto& phi = tables.phi[static_cast<size_t>(i)];
    Eigen::RowVectorXd logits(n_actions);
    for (std::int64_t u = 0; u < n_actions; ++u) {
      const double base = tables.log_q_hat(i, u);
      logits[u] = base == kNegInf ? kNegInf : base + phi.row(u).dot(w_block);
    }
    const double lse = log_sum_exp_row(logits);
    if (lse == kNegInf)
      throw NumericalError("every likelihood term underflowed at observation " +
                           std::to_string(i));
    const std::int64_t u_obs = tables.observed_action[i];
    total += lse - phi.row(u_obs).dot(w_block);

    if (grad) {
      Eigen::VectorXd g_block = -phi.row(u_obs).transpose();
      for (std::int64_t u = 0; u < n_actions; ++u) {
        if (logits[u] == kNegInf) continue;
        const double pi_u = std::exp(logits[u] - lse);
        g_block += pi_u * phi.row(u).transpose();
      }
      if (mode == WeightMode::kStationary)
        *grad += g_block;
      else
        grad->segment(i * f_count, f_count) = g_block;
    }
  }
  return total;
}

Eigen::VectorXd induced_policy_row(const IocTables& tables, WeightMode mode,
                                   const Eigen::VectorXd& w, std::int64_t i) {
  const std::int64_t n_actions = tables.log_q_hat.cols();
  const int f_count = tables.feature_count;
  const Eigen::VectorXd w_block =
      mode == WeightMode::kStationary ? w : w.segment(i * f_count, f_count);
  const auto& phi = tables.phi[static_cast<size_t>(i)];
  Eigen::RowVectorXd logits(n_actions);
  for (std::int64_t u = 0; u < n_actions; ++u) {
    const double base = tables.log_q_hat(i, u);
    logits[u] = base == kNegInf ? kNegInf : base + phi.row(u).dot(w_block);
  }
  const double lse = log_sum_exp_row(logits);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n_actions);
  double total = 0.0;
  for (std::int64_t u = 0; u < n_actions; ++u) {
    if (logits[u] == kNegInf) continue;
    row[u] = std::exp(logits[u] - lse);
    total += row[u];
  }
  row /= total;
  return row;
}

std::vector<int> gauge_directions(const IocTables& tables, double tol) {
  std::vector<int> out;
  for (int f = 0; f < tables.feature_count; ++f) {
    bool flat = true;
    for (std::int64_t i = 0; i < tables.observations() && flat; ++i) {
      const auto& phi = tables.phi[static_cast<size_t>(i)];
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (std::int64_t u = 0; u < tables.log_q_hat.cols(); ++u) {
        if (tables.log_q_hat(i, u) == kNegInf) continue;  // excluded action
        lo = std::min(lo, phi(u, f));
        hi = std::max(hi, phi(u, f));
      }
      if (hi - lo > tol * std::max(1.0, std::abs(hi))) flat = false;
    }
    if (flat) out.push_back(f);
  }
  return out;
}

IocFit fit_tables(const IocTables& tables, WeightMode mode,
                  WeightConstraint constraint, double ridge,
                  const SolverConfig& config) {
  tables.validate();
  const std::int64_t dim =
      mode == WeightMode::kStationary
          ? tables.feature_count
          : static_cast<std::int64_t>(tables.feature_count) * tables.observations();

  Objective objective = [&](const Eigen::VectorXd& w, Eigen::VectorXd* grad) {
    double value = ioc_nll(tables, mode, w, grad);
    if (ridge > 0.0) {
      value += 0.5 * ridge * w.squaredNorm();
      if (grad) *grad += ridge * w;
    }
    return value;
  };

  SolverConfig cfg = config;
  cfg.project_nonpositive = constraint == WeightConstraint::kNonpositive;
  // Convex objective: w = 0 start only affects the iteration count.
  const SolveResult res = minimize(objective, Eigen::VectorXd::Zero(dim), cfg);

  IocFit out;
  out.weights = res.x;
  out.status = res.status;
  out.nll = res.objective;
  out.gradient_norm = res.gradient_norm;
  out.iterations = res.iterations;
  for (std::int64_t i = 0; i < tables.observations(); ++i)
    out.dropped_term -= tables.log_q_hat(i, tables.observed_action[i]);
  out.gauge_features = gauge_directions(tables);
  return out;
}

IocFit fit(const IocProblem& prob, const SolverConfig& config) {
  const IocTables tables = assemble_tables(prob);
  return fit_tables(tables, prob.mode, prob.constraint, prob.ridge, config);
}

Eigen::VectorXd reconstruct_cost(const FeatureBasis& basis, const GridSpace& grid,
                                 const Eigen::VectorXd& w) {
  if (w.size() != basis.size())
    throw ValidationError("weight vector does not match the basis");
  return -(basis.evaluate_on_grid(grid) * w);
}

std::vector<Eigen::VectorXd> reconstruct_cost_per_step(const FeatureBasis& basis,
                                                       const GridSpace& grid,
                                                       const Eigen::VectorXd& stacked,
                                                       int blocks) {
  if (stacked.size() != static_cast<std::int64_t>(basis.size()) * blocks)
    throw ValidationError("stacked weights do not match basis and block count");
  const Eigen::MatrixXd h = basis.evaluate_on_grid(grid);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<size_t>(blocks));
  for (int b = 0; b < blocks; ++b)
    out.push_back(-(h * stacked.segment(b * basis.size(), basis.size())));
  return out;
}

KlValue cost_discrepancy(const Eigen::VectorXd& c_true, const Eigen::VectorXd& c_est) {
  if (c_true.size() != c_est.size())
    throw ValidationError("cost discrepancy: tables live on different grids");
  if (!c_true.allFinite() || !c_est.allFinite())
    throw ValidationError("cost discrepancy: costs must be finite");

  auto normalize = [](const Eigen::VectorXd& c) {
    Eigen::VectorXd shifted = c.array() - c.minCoeff();
    const double total = shifted.sum();
    if (!(total > 0.0))
      throw NumericalError("cost discrepancy: constant cost cannot be normalized");
    return Eigen::VectorXd(shifted / total);
  };

  return kl_mass(normalize(c_true), normalize(c_est));
}

}  // namespace klio
