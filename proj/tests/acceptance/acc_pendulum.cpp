// Criterion 8: pendulum end-to-end at desk scale. The pipeline mirrors the
// running example: estimate both pendulum pmfs from uniform-input episode
// databases, compute the greedy policy, roll out, reconstruct the cost from
// the observed pairs, and feed it back.

#include <chrono>
#include <cmath>
#include <numbers>

#include "acceptance.hpp"
#include "klio/estimation.hpp"
#include "klio/foc.hpp"
#include "klio/ioc.hpp"
#include "klio/pendulum.hpp"

namespace klio::acceptance {

using namespace klio;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Smallest reachable discrepancy for a two-feature cost class, by scanning
// the (nonnegative) weight quadrant. Certifies whether the acceptance
// threshold is attainable for any fit in the class at all.
double in_class_minimum(const Eigen::VectorXd& c_true, const Eigen::MatrixXd& h,
                        double hi) {
  double best = std::numeric_limits<double>::infinity();
  const int steps = 200;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      if (i == 0 && j == 0) continue;
      const Eigen::VectorXd c = (hi * i / steps) * h.col(0) + (hi * j / steps) * h.col(1);
      const auto d = cost_discrepancy(c_true, c);
      if (!d.infinite && d.value < best) best = d.value;
    }
  }
  return best;
}

}  // namespace

Outcome criterion_pendulum(std::ostringstream& log) {
  const auto t0 = Clock::now();
  const std::uint64_t root = 2;  // pinned pipeline seed

  const PendulumParams target = PendulumParams::target();
  const PendulumParams ref = PendulumParams::reference();
  const auto sg = pendulum_state_grid(target);
  const auto ag = pendulum_action_grid(target);

  HistogramOptions opts;
  opts.smoothing = 1e-4;
  const auto p_kernel = histogram_estimate(
      simulate_pendulum_database(target, 1500, 100, root * 1000 + 1), sg, ag, opts);
  const auto q_kernel = histogram_estimate(
      simulate_pendulum_database(ref, 1500, 100, root * 1000 + 2), sg, ag, opts);
  const auto q_policy = reference_pendulum_policy(ref, 0.8);

  ControlProblem prob{1,        p_kernel,
                      DiscreteDistribution::uniform(sg),
                      q_kernel, q_policy,
                      {pendulum_stage_cost(*sg)},
                      1.0};
  const auto policy = optimal_policy(prob, backward_recursion(prob));

  auto stabilization = [&](const PolicyKernel& pol) {
    int success = 0;
    for (int s = 0; s < 20; ++s) {
      Rng rng = derive_stream(root * 1000 + 3, static_cast<std::uint64_t>(s));
      PendulumState cur{-std::numbers::pi + 0.05, 0.0};
      for (int k = 0; k < 100; ++k) {
        const std::int64_t cell = sg->locate(Eigen::Vector2d(cur.theta, cur.omega));
        const std::int64_t u_cell =
            sample_mass(pol.table_at_step(1).row(cell).transpose(), rng);
        cur = pendulum_step(target, cur, ag->center(u_cell)[0], rng);
        if (std::abs(cur.theta) < 0.2) {
          ++success;
          break;
        }
      }
    }
    return success;
  };
  const int forward_success = stabilization(policy);

  // Observed pairs: six catch/hold rollouts near the top (informative about
  // the braking preference), wrap discontinuities filtered out.
  const PendulumState starts[] = {{0.3, 1.0},  {-0.3, -1.0}, {0.5, 1.5},
                                  {-0.5, -1.5}, {0.8, 2.0},  {-0.8, -2.0}};
  IocProblem ioc{{},       p_kernel,
                 q_kernel, q_policy,
                 FeatureBasis({abs_deviation(0, 0.0), abs_deviation(1, 0.0)}),
                 WeightMode::kStationary,
                 WeightConstraint::kNone,
                 0.0};
  for (int s = 0; s < 6; ++s) {
    Rng rng = derive_stream(root * 1000 + 4, static_cast<std::uint64_t>(s));
    const Dataset ds = simulate_pendulum_policy(target, policy, starts[s], 55, rng);
    const Dataset filtered = filter_jump_discontinuities(ds, 0, std::numbers::pi);
    for (const auto& rec : filtered.pairs)
      ioc.observations.push_back({sg->locate(rec.x_prev), ag->locate(rec.u)});
  }

  const auto t_fit = Clock::now();
  const auto fitres = fit(ioc);
  const double fit_seconds = seconds_since(t_fit);

  const bool signs_ok = fitres.weights[0] < 0.0 && fitres.weights[1] < 0.0 &&
                        std::abs(fitres.weights[0]) > std::abs(fitres.weights[1]);

  const auto c_star = reconstruct_cost(ioc.basis, *sg, fitres.weights);
  ControlProblem rerun = prob;
  rerun.stage_costs = {c_star};
  const int rerun_success =
      stabilization(optimal_policy(rerun, backward_recursion(rerun)));

  const auto c_true = pendulum_stage_cost(*sg);
  const auto discrepancy = cost_discrepancy(c_true, c_star);
  const bool discrepancy_ok = !discrepancy.infinite && discrepancy.value <= 0.01;

  const double total_seconds = seconds_since(t0);
  const bool runtime_ok = total_seconds <= 120.0 && fit_seconds <= 40.0;

  log << "     forward stabilization: " << forward_success << "/20 (need >= 16)\n";
  log << "     observed pairs after wrap filter: " << ioc.observations.size() << "\n";
  log << "     fitted weights: [" << fitres.weights[0] << ", " << fitres.weights[1]
      << "] (reference point [-6.09, -4.48]); signs and ordering "
      << (signs_ok ? "ok" : "NOT ok") << "\n";
  log << "     reconstructed-cost stabilization: " << rerun_success
      << "/20 (need >= 16)\n";
  log << "     normalized-cost discrepancy: "
      << (discrepancy.infinite ? std::string("infinite")
                               : std::to_string(discrepancy.value))
      << " (threshold 0.01; Table-1 reference 0.00162)\n";
  if (!discrepancy_ok) {
    const double floor_abs = in_class_minimum(
        c_true, ioc.basis.evaluate_on_grid(*sg), 20.0);
    FeatureBasis paper_basis({exp_gap(0, 0.0, true), exp_gap(1, 0.0, false)});
    const double floor_exp = in_class_minimum(
        c_true, paper_basis.evaluate_on_grid(*sg), 4000.0);
    log << "     certificate: the smallest discrepancy ANY weight vector can"
           " reach on this grid is "
        << floor_abs << " for the |theta|,|omega| class and " << floor_exp
        << " for the saturating-gap class; the 0.01 threshold is unattainable"
           " at desk scale under the shift+normalize+KL metric\n";
  }
  log << "     runtime: total " << total_seconds << " s (<= 120), fit "
      << fit_seconds << " s (<= 40)\n";

  Outcome out;
  out.pass = forward_success >= 16 && signs_ok && rerun_success >= 16 &&
             discrepancy_ok && runtime_ok;
  out.detail = std::string("forward ") + (forward_success >= 16 ? "ok" : "FAIL") +
               "; signs/ordering " + (signs_ok ? "ok" : "FAIL") + "; re-run " +
               (rerun_success >= 16 ? "ok" : "FAIL") + "; discrepancy " +
               (discrepancy_ok ? "ok" : "FAIL (see certificate)") + "; runtime " +
               (runtime_ok ? "ok" : "FAIL");
  return out;
}

}  // namespace klio::acceptance
