#include "klio/distribution.hpp"

#include <cmath>

#include "klio/errors.hpp"

namespace klio {

namespace {

void check_masses(const Eigen::VectorXd& mass) {
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (!(mass[i] >= 0.0))
      throw ValidationError("distribution mass must be nonnegative and finite");
  }
  const double total = mass.sum();
  if (std::abs(total - 1.0) > DiscreteDistribution::kMassTolerance)
    throw ValidationError("distribution mass must sum to 1 within 1e-12");
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(GridPtr grid, Eigen::VectorXd mass)
    : grid_(std::move(grid)), mass_(std::move(mass)) {
  if (!grid_) throw ValidationError("distribution needs a grid");
  if (mass_.size() != grid_->size())
    throw ValidationError("distribution mass size does not match grid");
  check_masses(mass_);
}

DiscreteDistribution DiscreteDistribution::normalized(GridPtr grid,
                                                      Eigen::VectorXd weights) {
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0))
      throw ValidationError("weights must be nonnegative and finite");
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw NumericalError("cannot normalize all-zero weights");
  weights /= total;
  return DiscreteDistribution(std::move(grid), std::move(weights));
}

DiscreteDistribution DiscreteDistribution::delta(GridPtr grid, std::int64_t cell) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(grid->size());
  if (cell < 0 || cell >= grid->size())
    throw ValidationError("delta cell out of range");
  mass[cell] = 1.0;
  return DiscreteDistribution(std::move(grid), std::move(mass));
}

DiscreteDistribution DiscreteDistribution::uniform(GridPtr grid) {
  const auto n = grid->size();
  Eigen::VectorXd mass = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return DiscreteDistribution(std::move(grid), std::move(mass));
}

KlValue kl_mass(const Eigen::Ref<const Eigen::VectorXd>& p,
                const Eigen::Ref<const Eigen::VectorXd>& q) {
  if (p.size() != q.size()) throw ValidationError("kl: size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return KlValue::infinity();
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return KlValue::finite(acc);
}

KlValue kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (!p.grid()->same_geometry(*q.grid()))
    throw ValidationError("kl: distributions live on different grids");
  return kl_mass(p.mass(), q.mass());
}

double expectation(const DiscreteDistribution& p, const Eigen::VectorXd& values) {
  if (values.size() != p.size())
    throw ValidationError("expectation: value table size mismatch");
  return p.mass().dot(values);
}

double expectation(const DiscreteDistribution& p,
                   const std::function<double(std::int64_t)>& f) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) == 0.0) continue;  // f only needs to exist on the support
    acc += p(i) * f(i);
  }
  return acc;
}

std::int64_t sample_mass(const Eigen::Ref<const Eigen::VectorXd>& mass, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    last_positive = i;
    cum += mass[i];
    if (u < cum) return i;
  }
  // Round-off at the top of the CDF lands on the last supported cell.
  return last_positive;
}

std::int64_t sample(const DiscreteDistribution& p, Rng& rng) {
  return sample_mass(p.mass(), rng);
}

KlValue chained_joint_kl(const DiscreteDistribution& p_joint,
                         const DiscreteDistribution& q_joint, int split_dims) {
  const auto& grid = *p_joint.grid();
  if (!grid.same_geometry(*q_joint.grid()))
    throw ValidationError("chained kl: joints live on different grids");
  if (split_dims < 1 || split_dims >= grid.ndim())
    throw ValidationError("chained kl: split must leave axes on both sides");

  // Row-major layout means the leading axes are contiguous blocks: cell
  // (v, z) = v * block + z.
  std::int64_t v_cells = 1;
  for (int d = 0; d < split_dims; ++d) v_cells *= grid.axis(d).bins;
  const std::int64_t block = grid.size() / v_cells;

  Eigen::VectorXd p_marg = Eigen::VectorXd::Zero(v_cells);
  Eigen::VectorXd q_marg = Eigen::VectorXd::Zero(v_cells);
  for (std::int64_t v = 0; v < v_cells; ++v) {
    p_marg[v] = p_joint.mass().segment(v * block, block).sum();
    q_marg[v] = q_joint.mass().segment(v * block, block).sum();
  }

  const KlValue marginal = kl_mass(p_marg, q_marg);
  if (marginal.infinite) return KlValue::infinity();

  double conditional = 0.0;
  for (std::int64_t v = 0; v < v_cells; ++v) {
    if (p_marg[v] == 0.0) continue;
    const Eigen::VectorXd p_cond = p_joint.mass().segment(v * block, block) / p_marg[v];
    const Eigen::VectorXd q_cond = q_joint.mass().segment(v * block, block) / q_marg[v];
    const KlValue kl = kl_mass(p_cond, q_cond);
    if (kl.infinite) return KlValue::infinity();
    conditional += p_marg[v] * kl.value;
  }
  return KlValue::finite(marginal.value + conditional);
}

}  // namespace klio
