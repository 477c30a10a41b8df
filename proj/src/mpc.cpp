#include "ampc/mpc.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ampc {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Stacked residual r(u) = [Lq (x_i - x_r); Lr (u_i - u_r)]_{i<N} and its
// Jacobian, where |Lq e|^2 = e^T Q e.
struct ResidualModel {
  VectorXd r;
  MatrixXd jac;
  Sequence rollout;
  double value() const { return r.squaredNorm(); }
};

class TrackingProblem {
 public:
  TrackingProblem(const ParametricModel& model, const VectorXd& theta, const VectorXd& x_k,
                  const ReferenceTrajectory& ref, long k, const MpcConfig& cfg)
      : model_(model), theta_(theta), x_k_(x_k), ref_(ref), k_(k), cfg_(cfg),
        Lq_(weight_root(cfg.Q)), Lr_(weight_root(cfg.R)) {}

  int dim() const { return cfg_.N * model_.m(); }

  // Rounding error of J_N: residuals are differences of O(|x|) quantities,
  // so their absolute error scales with the states, not with J_N.
  double rounding_floor(const ResidualModel& res, const VectorXd& u_flat) const {
    double scale = 0.0;
    for (int i = 0; i < cfg_.N; ++i) {
      scale += (Lq_ * res.rollout[i]).squaredNorm() +
               (Lr_ * u_flat.segment(i * model_.m(), model_.m())).squaredNorm();
    }
    return 16.0 * kEps * (res.value() + 2.0 * res.r.norm() * std::sqrt(scale));
  }

  ResidualModel evaluate(const VectorXd& u_flat, bool with_jacobian) const {
    const int n = model_.n();
    const int m = model_.m();
    const int N = cfg_.N;
    ResidualModel res;
    res.r.resize(N * (n + m));
    if (with_jacobian) res.jac = MatrixXd::Zero(N * (n + m), N * m);
    MatrixXd sens = MatrixXd::Zero(n, N * m);
    VectorXd x = x_k_;
    res.rollout.reserve(static_cast<std::size_t>(N + 1));
    res.rollout.push_back(x);
    for (int i = 0; i < N; ++i) {
      const VectorXd u = u_flat.segment(i * m, m);
      const int row = i * (n + m);
      res.r.segment(row, n) = Lq_ * (x - ref_.x_at(k_ + i));
      res.r.segment(row + n, m) = Lr_ * (u - ref_.u_at(k_ + i));
      if (with_jacobian) {
        res.jac.block(row, 0, n, N * m) = Lq_ * sens;
        res.jac.block(row + n, i * m, m, m) = Lr_;
        const auto jac = step_jacobian(model_, x, u, theta_);
        MatrixXd next = jac.A * sens;
        next.middleCols(i * m, m) += jac.B;
        sens = std::move(next);
      }
      x = step(model_, x, u, theta_);
      res.rollout.push_back(x);
    }
    return res;
  }

 private:
  const ParametricModel& model_;
  const VectorXd& theta_;
  const VectorXd& x_k_;
  const ReferenceTrajectory& ref_;
  long k_;
  const MpcConfig& cfg_;
  MatrixXd Lq_;
  MatrixXd Lr_;
};

bool finite_rollout(const ResidualModel& res) {
  if (!res.r.allFinite()) return false;
  for (const auto& x : res.rollout)
    if (!x.allFinite()) return false;
  return true;
}

void check_inputs(const ParametricModel& model, const VectorXd& theta, const VectorXd& x_k,
                  const Sequence& u_seq, const ReferenceTrajectory& ref, const MpcConfig& cfg) {
  if (x_k.size() != model.n() || theta.size() != model.S()) {
    throw ConfigError("mpc: state or parameter dimension mismatch");
  }
  if (static_cast<int>(u_seq.size()) != cfg.N) {
    throw ConfigError("mpc: input sequence length must equal the horizon N");
  }
  for (const auto& u : u_seq)
    if (u.size() != model.m()) throw ConfigError("mpc: input dimension mismatch");
  if (ref.M < 1 || static_cast<int>(ref.x_r.size()) != ref.M) {
    throw ConfigError("mpc: reference trajectory is empty");
  }
}

}  // namespace

void MpcConfig::validate(int n, int m) const {
  if (Q.rows() != n || Q.cols() != n || !is_positive_definite(Q)) {
    throw ConfigError("mpc.Q must be a symmetric positive definite n x n matrix");
  }
  if (R.rows() != m || R.cols() != m || !is_positive_definite(R)) {
    throw ConfigError("mpc.R must be a symmetric positive definite m x m matrix");
  }
  if (N < 1) throw ConfigError("mpc.N must be >= 1");
  if (!(gn_tol > 0.0)) throw ConfigError("mpc.gn_tol must be > 0");
  if (max_iter < 1) throw ConfigError("mpc.max_iter must be >= 1");
  if (!(lm_damping >= 0.0)) throw ConfigError("mpc.lm_damping must be >= 0");
}

CostEvaluation evaluate_cost(const ParametricModel& model, const VectorXd& theta_hat,
                             const VectorXd& x_k, const Sequence& u_seq,
                             const ReferenceTrajectory& ref, long k, const MpcConfig& config) {
  check_inputs(model, theta_hat, x_k, u_seq, ref, config);
  CostEvaluation out;
  VectorXd x = x_k;
  out.rollout.push_back(x);
  for (int i = 0; i < config.N; ++i) {
    const VectorXd ex = x - ref.x_at(k + i);
    const VectorXd eu = u_seq[i] - ref.u_at(k + i);
    out.value += ex.dot(config.Q * ex) + eu.dot(config.R * eu);
    x = step(model, x, u_seq[i], theta_hat);
    out.rollout.push_back(x);
  }
  if (!std::isfinite(out.value) || !x.allFinite()) {
    throw Error(ErrorCode::RolloutDiverged, "evaluate_cost: non-finite prediction");
  }
  return out;
}

VectorXd cost_gradient(const ParametricModel& model, const VectorXd& theta_hat,
                       const VectorXd& x_k, const Sequence& u_seq,
                       const ReferenceTrajectory& ref, long k, const MpcConfig& config) {
  check_inputs(model, theta_hat, x_k, u_seq, ref, config);
  TrackingProblem prob(model, theta_hat, x_k, ref, k, config);
  const auto res = prob.evaluate(stack(u_seq), true);
  return 2.0 * res.jac.transpose() * res.r;
}

Sequence reference_inputs(const ReferenceTrajectory& ref, long k, int N) {
  Sequence u;
  u.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) u.push_back(ref.u_at(k + i));
  return u;
}

Sequence shift_warm_start(const Sequence& previous) {
  if (previous.empty()) return previous;
  Sequence out(previous.begin() + 1, previous.end());
  out.push_back(previous.back());
  return out;
}

MpcSolution solve(const ParametricModel& model, const VectorXd& theta_hat, const VectorXd& x_k,
                  const ReferenceTrajectory& ref, long k, const MpcConfig& config,
                  const Sequence& warm_start) {
  check_inputs(model, theta_hat, x_k, warm_start, ref, config);
  const int m = model.m();
  TrackingProblem prob(model, theta_hat, x_k, ref, k, config);

  VectorXd u = stack(warm_start);
  ResidualModel cur = prob.evaluate(u, true);
  if (!finite_rollout(cur)) {
    throw Error(ErrorCode::RolloutDiverged, "mpc solve: non-finite rollout at warm start");
  }

  auto package = [&](const VectorXd& uu, const ResidualModel& res, int iters, double gnorm) {
    MpcSolution sol;
    sol.u_star = unstack(uu, m, config.N);
    sol.first_input = sol.u_star.front();
    sol.value = res.value();
    sol.predicted_states = res.rollout;
    sol.iterations = iters;
    sol.grad_norm = gnorm;
    return sol;
  };

  double mu = config.lm_damping;
  VectorXd grad = 2.0 * cur.jac.transpose() * cur.r;
  int iter = 0;
  while (grad.norm() > config.gn_tol * (1.0 + cur.value())) {
    if (iter >= config.max_iter) {
      throw ConvergenceFailure("mpc solve: gradient norm " + std::to_string(grad.norm()) +
                                   " after " + std::to_string(iter) + " iterations",
                               package(u, cur, iter, grad.norm()));
    }
    ++iter;
    const MatrixXd H = cur.jac.transpose() * cur.jac;
    MatrixXd lhs = H;
    lhs.diagonal() += mu * H.diagonal();
    const VectorXd delta = lhs.ldlt().solve(-cur.jac.transpose() * cur.r);
    const VectorXd trial_u = u + delta;
    ResidualModel trial = prob.evaluate(trial_u, true);
    bool accept = delta.allFinite() && finite_rollout(trial) && trial.value() <= cur.value();
    VectorXd trial_grad;
    if (!accept && delta.allFinite() && finite_rollout(trial) &&
        trial.value() <= cur.value() + prob.rounding_floor(cur, u)) {
      // Near the minimum, J_N changes by less than its rounding error; let
      // the gradient decide.
      trial_grad = 2.0 * trial.jac.transpose() * trial.r;
      accept = trial_grad.norm() < grad.norm();
    }
    if (accept) {
      u = trial_u;
      cur = std::move(trial);
      grad = trial_grad.size() ? trial_grad : VectorXd(2.0 * cur.jac.transpose() * cur.r);
      mu /= 3.0;
      if (mu < 1e-12) mu = 0.0;
    } else {
      mu = std::max(3.0 * mu, 1e-6);
    }
  }
  return package(u, cur, iter, grad.norm());
}

HessianCheck check_hessian_pd(const ParametricModel& model, const VectorXd& theta_hat,
                              const MpcSolution& solution, const ReferenceTrajectory& ref,
                              long k, const MpcConfig& config) {
  const VectorXd& x_k = solution.predicted_states.front();
  const VectorXd u = stack(solution.u_star);
  const int dim = static_cast<int>(u.size());
  const int m = model.m();
  HessianCheck out;
  out.hessian.resize(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(u(j)));
    VectorXd up = u, dn = u;
    up(j) += h;
    dn(j) -= h;
    const VectorXd gp = cost_gradient(model, theta_hat, x_k, unstack(up, m, config.N), ref, k, config);
    const VectorXd gm = cost_gradient(model, theta_hat, x_k, unstack(dn, m, config.N), ref, k, config);
    out.hessian.col(j) = (gp - gm) / (2.0 * h);
  }
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  out.lambda_min = symmetric_eigen_bounds(out.hessian).min;
  out.pd = out.lambda_min > 0.0;
  return out;
}

}  // namespace ampc
