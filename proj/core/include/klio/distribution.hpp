#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "klio/grid.hpp"
#include "klio/rng.hpp"

namespace klio {

// KL divergence result. Infinity (absolute-continuity violation) is a tagged
// state, never an IEEE Inf flowing through arithmetic; callers must branch.
struct KlValue {
  double value = 0.0;
  bool infinite = false;

  static KlValue infinity() { return {0.0, true}; }
  static KlValue finite(double v) { return {v, false}; }
};

// Probability masses over the cells of a grid. Nonnegative, sums to one
// within kMassTolerance. Immutable after construction.
class DiscreteDistribution {
 public:
  static constexpr double kMassTolerance = 1e-12;

  DiscreteDistribution(GridPtr grid, Eigen::VectorXd mass);

  // Explicit renormalization of nonnegative weights (never done silently).
  static DiscreteDistribution normalized(GridPtr grid, Eigen::VectorXd weights);
  static DiscreteDistribution delta(GridPtr grid, std::int64_t cell);
  static DiscreteDistribution uniform(GridPtr grid);

  const GridPtr& grid() const { return grid_; }
  const Eigen::VectorXd& mass() const { return mass_; }
  double operator()(std::int64_t cell) const { return mass_[cell]; }
  std::int64_t size() const { return mass_.size(); }

 private:
  GridPtr grid_;
  Eigen::VectorXd mass_;
};

// Sum p ln(p/q) with 0 ln(0/q) = 0; infinite when p has mass where q has
// none. Works on raw mass vectors so kernel rows can reuse it.
KlValue kl_mass(const Eigen::Ref<const Eigen::VectorXd>& p,
                const Eigen::Ref<const Eigen::VectorXd>& q);

KlValue kl_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q);

double expectation(const DiscreteDistribution& p, const Eigen::VectorXd& values);
double expectation(const DiscreteDistribution& p,
                   const std::function<double(std::int64_t)>& f);

// One draw; cells are emitted with probability equal to their mass.
std::int64_t sample(const DiscreteDistribution& p, Rng& rng);
std::int64_t sample_mass(const Eigen::Ref<const Eigen::VectorXd>& mass, Rng& rng);

// Chain rule evaluation over a joint on a product grid whose leading
// `split_dims` axes form the first variable: KL(p(v)||q(v)) +
// E_{p(v)}[KL(p(z|v)||q(z|v))]. Equals the flat joint KL.
KlValue chained_joint_kl(const DiscreteDistribution& p_joint,
                         const DiscreteDistribution& q_joint, int split_dims);

}  // namespace klio
