#include "klio/solver.hpp"

#include <cmath>
#include <deque>

#include "klio/errors.hpp"

namespace klio {

void SolverConfig::validate() const {
  if (!(gradient_tolerance > 0.0)) throw ValidationError("gradient tolerance must be > 0");
  if (max_iterations < 1) throw ValidationError("max iterations must be >= 1");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0))
    throw ValidationError("sufficient decrease must lie in (0,1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
    throw ValidationError("backtrack factor must lie in (0,1)");
  if (memory < 1) throw ValidationError("memory must be >= 1");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kIterationLimit: return "iteration-limit";
    case SolveStatus::kDiverged: return "diverged";
    case SolveStatus::kAborted: return "aborted";
  }
  return "unknown";
}

Eigen::VectorXd project_nonpositive_orthant(Eigen::VectorXd x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::min(x[i], 0.0);
  return x;
}

namespace {

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Standard two-loop recursion; returns -H * grad.
Eigen::VectorXd lbfgs_direction(const std::deque<CurvaturePair>& pairs,
                                const Eigen::VectorXd& grad) {
  Eigen::VectorXd q = grad;
  std::vector<double> alpha(pairs.size());
  for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
    const auto& p = pairs[static_cast<size_t>(i)];
    alpha[static_cast<size_t>(i)] = p.rho * p.s.dot(q);
    q -= alpha[static_cast<size_t>(i)] * p.y;
  }
  if (!pairs.empty()) {
    const auto& last = pairs.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const double beta = p.rho * p.y.dot(q);
    q += (alpha[i] - beta) * p.s;
  }
  return -q;
}

}  // namespace

SolveResult minimize(const Objective& f, Eigen::VectorXd x0,
                     const SolverConfig& config) {
  config.validate();

  auto project = [&](Eigen::VectorXd v) {
    return config.project_nonpositive ? project_nonpositive_orthant(std::move(v)) : v;
  };

  SolveResult result;
  Eigen::VectorXd x = project(std::move(x0));
  Eigen::VectorXd grad(x.size());
  double fx = f(x, &grad);
  if (!std::isfinite(fx) || !grad.allFinite()) {
    result.x = x;
    result.status = SolveStatus::kAborted;
    result.message = "objective or gradient not finite at the start";
    return result;
  }
  result.trace.push_back(fx);

  std::deque<CurvaturePair> pairs;
  auto projected_gradient_norm = [&](const Eigen::VectorXd& xx,
                                     const Eigen::VectorXd& g) {
    return (project(xx - g) - xx).norm();
  };

  // When the gradient test passes, probe far along the steepest descent ray.
  // A strict decrease means we are sliding down an unbounded direction, not
  // sitting at a minimum; once that has happened, even a flat probe (the
  // objective may underflow to an exact constant along such a ray, while the
  // gradient stays nonzero) counts as continued escape.
  int ray_escapes = 0;
  enum class Probe { kMinimum, kEscaped, kFlatRay };
  auto probe_descent_ray = [&](Eigen::VectorXd& x_out, double& f_out,
                               const Eigen::VectorXd& g) {
    if (g.norm() == 0.0) return Probe::kMinimum;
    const Eigen::VectorXd dir = -g / g.norm();
    const double step = std::max(1.0, 2.0 * x_out.norm());
    const Eigen::VectorXd probe = project(x_out + step * dir);
    if ((probe - x_out).norm() == 0.0) return Probe::kMinimum;
    const double fp = f(probe, nullptr);
    if (!std::isfinite(fp)) return Probe::kMinimum;
    if (fp < f_out - (1e-12 + 0.25 * std::abs(f_out))) {
      x_out = probe;
      f_out = fp;
      ++ray_escapes;
      return Probe::kEscaped;
    }
    if (fp <= f_out && ray_escapes > 0) {
      x_out = probe;
      f_out = fp;
      return Probe::kFlatRay;
    }
    return Probe::kMinimum;
  };

  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    const double pg_norm = projected_gradient_norm(x, grad);
    if (pg_norm <= config.gradient_tolerance) {
      const Probe verdict = probe_descent_ray(x, fx, grad);
      if (verdict == Probe::kMinimum) {
        result.x = x;
        result.status = SolveStatus::kConverged;
        result.iterations = iter;
        result.objective = fx;
        result.gradient_norm = pg_norm;
        return result;
      }
      f(x, &grad);
      pairs.clear();
      result.trace.push_back(fx);
      if (verdict == Probe::kFlatRay || x.norm() > config.divergence_norm) {
        result.x = x;
        result.status = SolveStatus::kDiverged;
        result.iterations = iter;
        result.objective = fx;
        result.gradient_norm = projected_gradient_norm(x, grad);
        result.message = "objective keeps decreasing along an unbounded ray";
        return result;
      }
      continue;
    }

    Eigen::VectorXd direction = lbfgs_direction(pairs, grad);
    if (direction.dot(grad) >= 0.0) direction = -grad;  // safeguard

    // Backtracking Armijo on the projected arc.
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = project(x + step * direction);
      f_new = f(x_new, nullptr);
      if (std::isfinite(f_new)) {
        const double model_decrease = grad.dot(x_new - x);
        const bool moved = (x_new - x).norm() > 0.0;
        if (moved && f_new <= fx &&
            f_new <= fx + config.sufficient_decrease * model_decrease) {
          accepted = true;
          break;
        }
      }
      step *= config.backtrack_factor;
    }
    if (!accepted) {
      // One steepest-descent rescue before giving up.
      direction = -grad;
      step = 1.0 / std::max(1.0, grad.norm());
      for (int ls = 0; ls < 60 && !accepted; ++ls) {
        x_new = project(x + step * direction);
        f_new = f(x_new, nullptr);
        if (std::isfinite(f_new) && f_new < fx && (x_new - x).norm() > 0.0)
          accepted = true;
        else
          step *= config.backtrack_factor;
      }
      if (!accepted) {
        result.x = x;
        result.status = SolveStatus::kConverged;
        result.iterations = iter;
        result.objective = fx;
        result.gradient_norm = pg_norm;
        result.message = "line search stalled; returning best iterate";
        return result;
      }
      pairs.clear();
    }

    // One secant refinement along the accepted segment: exact for quadratics
    // (making the search CG-like there), an extrapolation when the minimum
    // lies beyond the unit step.
    {
      Eigen::VectorXd grad_probe(x.size());
      f(x_new, &grad_probe);
      const Eigen::VectorXd delta = x_new - x;
      const double d0 = grad.dot(delta);
      const double d1 = grad_probe.dot(delta);
      if (d0 < 0.0 && d1 != d0) {
        const double t = std::clamp(d0 / (d0 - d1), 0.05, 20.0);
        if (std::abs(t - 1.0) > 1e-3) {
          const Eigen::VectorXd x_ref = project(x + t * delta);
          const double f_ref = f(x_ref, nullptr);
          if (std::isfinite(f_ref) && f_ref < f_new) {
            x_new = x_ref;
            f_new = f_ref;
          }
        }
      }
    }

    Eigen::VectorXd grad_new(x.size());
    const double f_check = f(x_new, &grad_new);
    if (!std::isfinite(f_check) || !grad_new.allFinite()) {
      result.x = x;
      result.status = SolveStatus::kAborted;
      result.iterations = iter;
      result.objective = fx;
      result.gradient_norm = pg_norm;
      result.message = "objective or gradient became non-finite";
      return result;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      pairs.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(pairs.size()) > config.memory) pairs.pop_front();
    }

    x = std::move(x_new);
    fx = f_new;
    grad = std::move(grad_new);
    result.trace.push_back(fx);

    if (s.norm() > config.divergence_norm || x.norm() > config.divergence_norm) {
      result.x = x;
      result.status = SolveStatus::kDiverged;
      result.iterations = iter + 1;
      result.objective = fx;
      result.gradient_norm = projected_gradient_norm(x, grad);
      result.message = "iterates escaped the divergence threshold";
      return result;
    }
  }

  result.x = x;
  result.status = SolveStatus::kIterationLimit;
  result.iterations = iter;
  result.objective = fx;
  result.gradient_norm = projected_gradient_norm(x, grad);
  result.message = "iteration budget exhausted";
  return result;
}

double gradient_check(const Objective& f, const Eigen::VectorXd& x, double step) {
  if (!(step > 0.0)) throw ValidationError("gradient check needs step > 0");
  Eigen::VectorXd analytic(x.size());
  f(x, &analytic);
  double worst = 0.0;
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double fp = f(probe, nullptr);
    probe[i] = x[i] - step;
    const double fm = f(probe, nullptr);
    probe[i] = x[i];
    const double numeric = (fp - fm) / (2.0 * step);
    const double rel =
        std::abs(analytic[i] - numeric) / std::max(1e-12, std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace klio
