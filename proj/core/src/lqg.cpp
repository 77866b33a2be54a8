#include "klio/lqg.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "klio/errors.hpp"

namespace klio {

namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

Eigen::LLT<Eigen::MatrixXd> cholesky_or_throw(const Eigen::MatrixXd& m,
                                              const std::string& what) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError(what + " is not positive definite");
  return llt;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < llt.matrixL().rows(); ++i)
    acc += 2.0 * std::log(llt.matrixL()(i, i));
  return acc;
}

}  // namespace

void GaussianLinearModel::validate() const {
  const int n = state_dim();
  const int p = input_dim();
  if (horizon < 1) throw ValidationError("gaussian model needs horizon >= 1");
  if (A.rows() != n || A.cols() != n || B.rows() != n)
    throw ValidationError("gaussian model: A/B shapes inconsistent");
  if (sigma.rows() != n || sigma.cols() != n || W.rows() != n || W.cols() != n ||
      R.rows() != n || R.cols() != n || Q.rows() != p || Q.cols() != p)
    throw ValidationError("gaussian model: covariance/weight shapes inconsistent");
  if (x_d.size() != n || u_d.size() != p)
    throw ValidationError("gaussian model: reference point sizes inconsistent");
  if (cost_center.size() && cost_center.size() != n)
    throw ValidationError("gaussian model: cost center size inconsistent");
  cholesky_or_throw(symmetrize(sigma), "Sigma");
  cholesky_or_throw(symmetrize(R), "R");
  cholesky_or_throw(symmetrize(Q), "Q");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(W));
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw ValidationError("gaussian model: W must be positive semidefinite");
}

LqgRecursion lqg_recursion(const GaussianLinearModel& model) {
  model.validate();
  const int n = model.state_dim();
  const int p = model.input_dim();
  const int N = model.horizon;

  const Eigen::MatrixXd R_inv =
      cholesky_or_throw(symmetrize(model.R), "R").solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::LLT<Eigen::MatrixXd> Q_llt = cholesky_or_throw(symmetrize(model.Q), "Q");
  const Eigen::MatrixXd Q_inv = Q_llt.solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd Q_sqrt = Q_llt.matrixL();
  const Eigen::MatrixXd sigma_llt_m = symmetrize(model.sigma);
  const Eigen::LLT<Eigen::MatrixXd> sigma_llt = cholesky_or_throw(sigma_llt_m, "Sigma");

  // Constant part of the per-step Gaussian KL.
  const double kappa =
      0.5 * (log_det_from_llt(cholesky_or_throw(symmetrize(model.R), "R")) -
             log_det_from_llt(sigma_llt) - static_cast<double>(n) +
             (R_inv * sigma_llt_m).trace());

  const Eigen::VectorXd& x_c = model.cost_point();
  const double trace_w_sigma = (model.W * sigma_llt_m).trace();

  LqgRecursion rec;
  rec.steps.resize(static_cast<size_t>(N) + 1);
  auto& steps = rec.steps;

  steps[static_cast<size_t>(N)].S = Eigen::MatrixXd::Zero(n, n);
  steps[static_cast<size_t>(N)].lin = Eigen::VectorXd::Zero(n);
  steps[static_cast<size_t>(N)].log_const = 0.0;
  steps[static_cast<size_t>(N)].omega = 0.0;

  for (int k = N; k >= 1; --k) {
    LqgStep& cur = steps[static_cast<size_t>(k)];
    LqgStep& prev = steps[static_cast<size_t>(k - 1)];

    cur.S_bar = symmetrize(cur.S + R_inv + model.W);
    const Eigen::MatrixXd M = symmetrize(Q_inv + model.B.transpose() * cur.S_bar * model.B);
    const Eigen::LLT<Eigen::MatrixXd> M_llt(M);
    if (M_llt.info() != Eigen::Success)
      throw NumericalError("lqg recursion: non-PD policy precision at step " +
                           std::to_string(k));
    cur.sigma_star = symmetrize(M_llt.solve(Eigen::MatrixXd::Identity(p, p)));

    const Eigen::VectorXd ell = R_inv * model.x_d + model.W * x_c + cur.lin;
    const Eigen::VectorXd g = Q_inv * model.u_d + model.B.transpose() * ell;
    cur.gain = cur.sigma_star * model.B.transpose() * cur.S_bar * model.A;
    cur.offset = cur.sigma_star * g;

    prev.S = symmetrize(model.A.transpose() *
                        (cur.S_bar - cur.S_bar * model.B * cur.sigma_star *
                                         model.B.transpose() * cur.S_bar) *
                        model.A);
    prev.lin = model.A.transpose() *
               (ell - cur.S_bar * model.B * cur.sigma_star * g);

    // ln det(I + Q^{1/2} B^T S_bar B Q^{1/2}) through a symmetric Cholesky.
    const Eigen::MatrixXd inner = symmetrize(
        Eigen::MatrixXd::Identity(p, p) +
        Q_sqrt.transpose() * model.B.transpose() * cur.S_bar * model.B * Q_sqrt);
    const double log_det_term = log_det_from_llt(cholesky_or_throw(inner, "I + Q^T S Q"));

    prev.log_const = cur.log_const - 0.5 * log_det_term +
                     0.5 * g.dot(cur.sigma_star * g) -
                     0.5 * model.u_d.dot(Q_inv * model.u_d) -
                     0.5 * model.x_d.dot(R_inv * model.x_d) -
                     0.5 * x_c.dot(model.W * x_c) - kappa - 0.5 * trace_w_sigma -
                     0.5 * (cur.S * sigma_llt_m).trace();
    prev.omega = -2.0 * prev.log_const;
  }
  return rec;
}

GaussianPolicy lqg_policy(const GaussianLinearModel& model, const LqgRecursion& rec,
                          int k, const Eigen::VectorXd& x_prev) {
  if (k < 1 || k > model.horizon)
    throw ValidationError("lqg policy: step out of range");
  if (x_prev.size() != model.state_dim())
    throw ValidationError("lqg policy: state dimension mismatch");
  const LqgStep& step = rec.at(k);
  GaussianPolicy g;
  g.mean = -step.gain * x_prev + step.offset;
  g.covariance = step.sigma_star;
  return g;
}

double lqg_value(const GaussianLinearModel& model, const LqgRecursion& rec,
                 const Eigen::VectorXd& x0) {
  if (x0.size() != model.state_dim())
    throw ValidationError("lqg value: state dimension mismatch");
  const LqgStep& s0 = rec.at(0);
  const double hat_c0 = -0.5 * x0.dot(s0.S * x0) + s0.lin.dot(x0) + s0.log_const;
  return -hat_c0;
}

double lqg_expected_correction(const GaussianLinearModel& model,
                               const LqgRecursion& rec, int k,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (k < 0 || k > model.horizon)
    throw ValidationError("lqg expected correction: step out of range");
  const LqgStep& step = rec.at(k);
  const Eigen::VectorXd m = model.A * x + model.B * u;
  return -0.5 * m.dot(step.S * m) - 0.5 * (step.S * model.sigma).trace() +
         step.lin.dot(m) + step.log_const;
}

Eigen::VectorXd sample_gaussian(const GaussianPolicy& g, Rng& rng) {
  const Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
  if (llt.info() != Eigen::Success)
    throw NumericalError("cannot sample from a non-PD Gaussian");
  Eigen::VectorXd z(g.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal01(rng);
  return g.mean + Eigen::MatrixXd(llt.matrixL()) * z;
}

}  // namespace klio
