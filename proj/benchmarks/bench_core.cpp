#include <benchmark/benchmark.h>

#include "klio/distribution.hpp"
#include "klio/foc.hpp"
#include "klio/ioc.hpp"
#include "klio/pendulum.hpp"

namespace {

using namespace klio;

Eigen::VectorXd simplex(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = -std::log(1.0 - uniform01(rng));
  return v / v.sum();
}

void KlDivergence(benchmark::State& state) {
  Rng rng(1);
  const auto grid = make_grid({AxisSpec{0.0, 1.0, static_cast<int>(state.range(0)), false}});
  const DiscreteDistribution p(grid, simplex(rng, state.range(0)));
  const DiscreteDistribution q(grid, simplex(rng, state.range(0)));
  for (auto _ : state) {
    auto kl = kl_divergence(p, q);
    benchmark::DoNotOptimize(kl);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(KlDivergence)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BackwardRecursion(benchmark::State& state) {
  Rng rng(2);
  const int s = static_cast<int>(state.range(0));
  const auto sg = make_grid({AxisSpec{0.0, 1.0, s, false}});
  const auto ag = make_grid({AxisSpec{0.0, 1.0, 5, false}});
  Eigen::MatrixXd p_table(s * 5, s), q_table(s * 5, s), q_u(s, 5);
  for (Eigen::Index r = 0; r < p_table.rows(); ++r) {
    p_table.row(r) = simplex(rng, s).transpose();
    q_table.row(r) = simplex(rng, s).transpose();
  }
  for (Eigen::Index r = 0; r < q_u.rows(); ++r) q_u.row(r) = simplex(rng, 5).transpose();
  ControlProblem prob{4,
                      TransitionKernel::stationary(sg, ag, p_table),
                      DiscreteDistribution::uniform(sg),
                      TransitionKernel::stationary(sg, ag, q_table),
                      PolicyKernel::stationary(sg, ag, q_u),
                      {Eigen::VectorXd::Random(s)},
                      1.0};
  for (auto _ : state) {
    auto tables = backward_recursion(prob);
    benchmark::DoNotOptimize(tables);
  }
  state.SetComplexityN(s);
}
BENCHMARK(BackwardRecursion)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void PendulumBinnedKernel(benchmark::State& state) {
  PendulumParams p = PendulumParams::target();
  p.theta_bins = static_cast<int>(state.range(0));
  p.omega_bins = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto kernel = pendulum_binned_kernel(p);
    benchmark::DoNotOptimize(kernel);
  }
}
BENCHMARK(PendulumBinnedKernel)->Arg(15)->Arg(25);

void IocNllGradient(benchmark::State& state) {
  Rng rng(3);
  const auto sg = make_grid({AxisSpec{0.0, 1.0, 25, false}});
  const auto ag = make_grid({AxisSpec{0.0, 1.0, 7, false}});
  Eigen::MatrixXd p_table(25 * 7, 25), q_table(25 * 7, 25), q_u(25, 7);
  for (Eigen::Index r = 0; r < p_table.rows(); ++r) {
    p_table.row(r) = simplex(rng, 25).transpose();
    q_table.row(r) = simplex(rng, 25).transpose();
  }
  for (Eigen::Index r = 0; r < q_u.rows(); ++r) q_u.row(r) = simplex(rng, 7).transpose();
  IocProblem prob{{},
                  TransitionKernel::stationary(sg, ag, p_table),
                  TransitionKernel::stationary(sg, ag, q_table),
                  PolicyKernel::stationary(sg, ag, q_u),
                  FeatureBasis({abs_deviation(0, 0.3), abs_deviation(0, 0.7)}),
                  WeightMode::kStationary,
                  WeightConstraint::kNone,
                  0.0};
  const auto m = state.range(0);
  for (std::int64_t i = 0; i < m; ++i)
    prob.observations.push_back({uniform_index(rng, 25), uniform_index(rng, 7)});
  const auto tables = assemble_tables(prob);
  Eigen::VectorXd w = Eigen::VectorXd::Random(2);
  Eigen::VectorXd grad(2);
  for (auto _ : state) {
    const double v = ioc_nll(tables, WeightMode::kStationary, w, &grad);
    benchmark::DoNotOptimize(v);
    benchmark::DoNotOptimize(grad);
  }
  state.SetComplexityN(m);
}
BENCHMARK(IocNllGradient)->RangeMultiplier(4)->Range(64, 1024)->Complexity();

}  // namespace

BENCHMARK_MAIN();
