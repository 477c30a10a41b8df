// Penalty solver for periodic reference trajectories with an excitation
// constraint on the regressor Gramian.

#include "ampc/refgen.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ampc {
namespace {

struct Layout {
  int n;
  int m;
  int M;
  int size() const { return n + m * M; }
};

struct Evaluation {
  double objective = 0.0;
  double periodicity = 0.0;  // |x_M - x_0|
  double lam_min = 0.0;
  double lam_max = 0.0;
  double penalized = 0.0;
  VectorXd grad;
};

class PenaltyProblem {
 public:
  PenaltyProblem(const ParametricModel& model, const VectorXd& theta,
                 const PeOptimizeOptions& opts)
      : model_(model), theta_(theta), opts_(opts),
        lay_{model.n(), model.m(), opts.M} {}

  const Layout& layout() const { return lay_; }

  // obj_weight = 0 gives the pure feasibility problem.
  Evaluation evaluate(const VectorXd& z, double mu, double obj_weight = 1.0) const {
    const int n = lay_.n;
    const int m = lay_.m;
    const int M = lay_.M;
    const int nz = lay_.size();
    const int S = model_.S();

    Evaluation ev;
    ev.grad = VectorXd::Zero(nz);
    VectorXd x = z.head(n);
    MatrixXd X = MatrixXd::Zero(n, nz);
    X.leftCols(n).setIdentity();

    MatrixXd G = MatrixXd::Zero(S, S);
    std::vector<MatrixXd> phis, Xs;
    std::vector<VectorXd> xs, us;
    VectorXd grad_obj = VectorXd::Zero(nz);
    for (int i = 0; i < M; ++i) {
      const VectorXd u = z.segment(n + i * m, m);
      ev.objective += (x.dot(opts_.Q * x) + u.dot(opts_.R * u)) / M;
      grad_obj += (2.0 / M) * X.transpose() * (opts_.Q * x);
      grad_obj.segment(n + i * m, m) += (2.0 / M) * (opts_.R * u);

      MatrixXd phi = regressor(model_, x, u).phi;
      G.noalias() += phi * phi.transpose();
      phis.push_back(std::move(phi));
      Xs.push_back(X);
      xs.push_back(x);
      us.push_back(u);

      const auto jac = step_jacobian(model_, x, u, theta_);
      MatrixXd Xn = jac.A * X;
      Xn.middleCols(n + i * m, m) += jac.B;
      x = step(model_, x, u, theta_);
      X = std::move(Xn);
    }

    const VectorXd p = x - z.head(n);
    MatrixXd dp = X;
    dp.leftCols(n) -= MatrixXd::Identity(n, n);
    ev.periodicity = p.norm();

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    ev.lam_min = es.eigenvalues()(0);
    ev.lam_max = es.eigenvalues()(S - 1);

    auto eig_grad = [&](const VectorXd& v) {
      // d(v^T G v)/dz = sum_i 2 y_i^T dy_i/dz with y_i = phi_i^T v.
      VectorXd g = VectorXd::Zero(nz);
      for (int i = 0; i < M; ++i) {
        const VectorXd y = phis[i].transpose() * v;
        MatrixXd dy = MatrixXd::Zero(n, nz);
        for (int j = 0; j < S; ++j) {
          if (v(j) == 0.0) continue;
          const auto& fj = model_.basis()[j];
          dy += v(j) * (fj.jacobian_x(xs[i], us[i]) * Xs[i]);
          dy.middleCols(n + i * m, m) += v(j) * fj.jacobian_u(xs[i], us[i]);
        }
        g += 2.0 * dy.transpose() * y;
      }
      return g;
    };

    const double lo = std::max(0.0, opts_.alpha - ev.lam_min);
    const double hi = std::max(0.0, ev.lam_max - opts_.beta);
    ev.penalized = obj_weight * ev.objective + mu * (p.squaredNorm() + lo * lo + hi * hi);
    ev.grad = obj_weight * grad_obj + mu * 2.0 * dp.transpose() * p;
    if (lo > 0.0) ev.grad -= mu * 2.0 * lo * eig_grad(es.eigenvectors().col(0));
    if (hi > 0.0) ev.grad += mu * 2.0 * hi * eig_grad(es.eigenvectors().col(S - 1));
    return ev;
  }

  double violation(const Evaluation& ev) const {
    return std::max({ev.periodicity, opts_.alpha - ev.lam_min, ev.lam_max - opts_.beta, 0.0});
  }

 private:
  const ParametricModel& model_;
  const VectorXd& theta_;
  const PeOptimizeOptions& opts_;
  Layout lay_;
};

// BFGS with Armijo backtracking on the penalized objective.
VectorXd minimize(const PenaltyProblem& prob, VectorXd z, double mu, double obj_weight = 1.0) {
  const int nz = prob.layout().size();
  MatrixXd H = MatrixXd::Identity(nz, nz);
  Evaluation ev = prob.evaluate(z, mu, obj_weight);
  for (int it = 0; it < 500; ++it) {
    if (ev.grad.norm() <= 1e-12 * (1.0 + std::abs(ev.penalized))) break;
    VectorXd dir = -H * ev.grad;
    if (dir.dot(ev.grad) >= 0.0) {
      H.setIdentity();
      dir = -ev.grad;
    }
    double t = 1.0;
    bool accepted = false;
    Evaluation trial;
    VectorXd zt;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      zt = z + t * dir;
      trial = prob.evaluate(zt, mu, obj_weight);
      if (std::isfinite(trial.penalized) &&
          trial.penalized <= ev.penalized + 1e-4 * t * ev.grad.dot(dir)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const VectorXd s = zt - z;
    const VectorXd y = trial.grad - ev.grad;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const MatrixXd I = MatrixXd::Identity(nz, nz);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    const double drop = ev.penalized - trial.penalized;
    z = zt;
    ev = trial;
    if (drop <= 1e-16 * (1.0 + std::abs(ev.penalized)) && s.norm() <= 1e-14 * (1.0 + z.norm())) {
      break;
    }
  }
  return z;
}

}  // namespace

PeOptimizeResult optimize_pe_reference(const ParametricModel& model, const VectorXd& theta,
                                       const PeOptimizeOptions& opts) {
  const int n = model.n();
  const int m = model.m();
  if (opts.M < 1) throw ConfigError("optimize_pe_reference: M must be >= 1");
  if (opts.Q.rows() != n || !is_positive_definite(opts.Q) || opts.R.rows() != m ||
      !is_positive_definite(opts.R)) {
    throw ConfigError("optimize_pe_reference: Q (n x n) and R (m x m) must be symmetric PD");
  }
  if (opts.alpha < 0.0 || opts.beta < opts.alpha) {
    throw ConfigError("optimize_pe_reference: need 0 <= alpha <= beta");
  }

  PenaltyProblem prob(model, theta, opts);
  const int nz = prob.layout().size();

  // Deterministic multi-start: the user guess first, then alternating and
  // sinusoidal input patterns over a few amplitudes and state offsets. The
  // lowest objective among the starts that reach feasibility wins; ties keep
  // the earlier start.
  std::vector<VectorXd> starts;
  if (opts.x_init.size() == n || static_cast<int>(opts.u_init.size()) == opts.M) {
    VectorXd z(nz);
    z.head(n) = opts.x_init.size() == n ? opts.x_init : VectorXd::Ones(n);
    for (int i = 0; i < opts.M; ++i) {
      z.segment(n + i * m, m) = static_cast<int>(opts.u_init.size()) == opts.M
                                    ? opts.u_init[i]
                                    : VectorXd::Constant(m, i % 2 == 0 ? 0.5 : -0.5);
    }
    starts.push_back(z);
  }
  for (double amp : {0.5, 1.0, 0.25, 2.0}) {
    for (double x0 : {1.0, -1.0, 0.5, -0.5}) {
      for (int pattern = 0; pattern < 2; ++pattern) {
        VectorXd z(nz);
        z.head(n) = VectorXd::Constant(n, x0);
        for (int i = 0; i < opts.M; ++i) {
          for (int c = 0; c < m; ++c) {
            const double phase = 2.0 * std::numbers::pi * (i + static_cast<double>(c) / m) / opts.M;
            z(n + i * m + c) = pattern == 0 ? amp * (i % 2 == 0 ? 1.0 : -1.0) : amp * std::cos(phase);
          }
        }
        starts.push_back(z);
      }
    }
  }

  VectorXd z;
  double best_objective = std::numeric_limits<double>::infinity();
  double best_violation = std::numeric_limits<double>::infinity();
  int round = 0;
  for (const auto& z0 : starts) {
    // Reach the feasible set first. At phi = 0 the eigenvalue penalty has a
    // zero gradient, so iterates that start or drift there never leave.
    VectorXd zc = minimize(prob, z0, 1.0, 0.0);
    const auto feas = prob.evaluate(zc, 1.0, 0.0);
    if (prob.violation(feas) > 1e-3) continue;

    // The first weight must make the collapsed point (violation alpha)
    // costlier than the feasible start.
    double mu = std::max(opts.mu0, opts.alpha > 0.0
                                       ? 10.0 * feas.objective / (opts.alpha * opts.alpha)
                                       : 0.0);
    double viol = prob.violation(feas);
    int r = 0;
    for (; r < opts.rounds; ++r, mu *= opts.mu_growth) {
      zc = minimize(prob, zc, mu);
      viol = prob.violation(prob.evaluate(zc, mu));
      if (viol <= 0.1 * opts.violation_tol) break;
    }
    const double obj = prob.evaluate(zc, 0.0).objective;
    const bool feasible = viol <= opts.violation_tol;
    const bool best_feasible = best_violation <= opts.violation_tol;
    if ((feasible && (!best_feasible || obj < best_objective)) ||
        (!feasible && !best_feasible && viol < best_violation)) {
      z = zc;
      best_objective = obj;
      best_violation = viol;
      round = r;
    }
  }
  if (z.size() == 0) {
    throw Error(ErrorCode::PenaltyStalled,
                "optimize_pe_reference: no start reached the excitation constraints");
  }

  Sequence u_r = unstack(z.tail(m * opts.M), m, opts.M);
  ReferenceTrajectory traj;
  traj.M = opts.M;
  traj.u_r = u_r;
  VectorXd x = z.head(n);
  for (const auto& u : u_r) {
    traj.x_r.push_back(x);
    x = step(model, x, u, theta);
  }
  traj.feasibility_residual = (x - z.head(n)).norm();
  auto cert = certify_pe(model, theta, traj);
  auto eigen_violation = [&](const PeCertificate& c) {
    return std::max({0.0, opts.alpha - c.alpha, c.beta - opts.beta});
  };

  // Close the period with the shooting solver when that stays next to the
  // penalty solution. With a nearly unit monodromy the shooting correction is
  // ill-conditioned and can jump to a distant periodic orbit.
  try {
    auto polished = periodic_shoot(model, theta, u_r, z.head(n));
    const auto pc = certify_pe(model, theta, polished);
    if ((polished.x_r[0] - z.head(n)).norm() <= 1e-4 * std::max(1.0, z.head(n).norm()) &&
        eigen_violation(pc) <= std::max(eigen_violation(cert), 0.5 * opts.violation_tol)) {
      traj = std::move(polished);
      cert = pc;
    }
  } catch (const Error&) {
  }

  PeOptimizeResult res;
  res.rounds = round + 1;
  res.periodicity_violation = traj.feasibility_residual;
  res.eigen_violation = eigen_violation(cert);
  for (int i = 0; i < opts.M; ++i) {
    res.objective += (traj.x_r[i].dot(opts.Q * traj.x_r[i]) +
                      traj.u_r[i].dot(opts.R * traj.u_r[i])) / opts.M;
  }
  res.trajectory = std::move(traj);
  if (res.periodicity_violation > opts.violation_tol || res.eigen_violation > opts.violation_tol) {
    throw Error(ErrorCode::PenaltyStalled,
                "optimize_pe_reference: constraint violation stalled at periodicity " +
                    std::to_string(res.periodicity_violation) + ", eigenvalue " +
                    std::to_string(res.eigen_violation));
  }
  return res;
}

}  // namespace ampc
