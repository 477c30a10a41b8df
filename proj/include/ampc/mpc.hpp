#pragma once

#include "ampc/error.hpp"
#include "ampc/model.hpp"
#include "ampc/refgen.hpp"

namespace ampc {

enum class HessianCheckMode { Strict, Fast, Off };

struct MpcConfig {
  MatrixXd Q;
  MatrixXd R;
  int N = 4;
  double gn_tol = 1e-9;     // relative: stop when |grad| <= gn_tol * (1 + J)
  int max_iter = 50;
  double lm_damping = 0.0;  // initial Marquardt parameter
  HessianCheckMode hessian_check = HessianCheckMode::Strict;

  void validate(int n, int m) const;
};

struct HessianCheck {
  double lambda_min = 0.0;
  bool pd = false;
  MatrixXd hessian;
};

struct MpcSolution {
  Sequence u_star;
  VectorXd first_input;
  double value = 0.0;
  Sequence predicted_states;  // x_{0|k} .. x_{N|k}
  int iterations = 0;
  double grad_norm = 0.0;
  std::optional<HessianCheck> hessian;
};

struct CostEvaluation {
  double value = 0.0;
  Sequence rollout;  // x_{0|k} .. x_{N|k}
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& msg, MpcSolution best)
      : Error(ErrorCode::ConvergenceFailure, msg), best_(std::move(best)) {}
  const MpcSolution& best() const { return best_; }

 private:
  MpcSolution best_;
};

/// J_N = sum_{i<N} |x_{i|k} - x_r(k+i)|_Q^2 + |u_{i|k} - u_r(k+i)|_R^2 with the
/// prediction rolled out under theta_hat and w = 0.
CostEvaluation evaluate_cost(const ParametricModel& model, const VectorXd& theta_hat,
                             const VectorXd& x_k, const Sequence& u_seq,
                             const ReferenceTrajectory& ref, long k, const MpcConfig& config);

/// Gradient of J_N with respect to the stacked input sequence, by forward
/// sensitivity propagation.
VectorXd cost_gradient(const ParametricModel& model, const VectorXd& theta_hat,
                       const VectorXd& x_k, const Sequence& u_seq,
                       const ReferenceTrajectory& ref, long k, const MpcConfig& config);

/// Reference inputs u_r(k) .. u_r(k+N-1).
Sequence reference_inputs(const ReferenceTrajectory& ref, long k, int N);

/// Previous minimizer shifted by one with the last element duplicated.
Sequence shift_warm_start(const Sequence& previous);

/// Levenberg-Marquardt on the stacked weighted residual.
MpcSolution solve(const ParametricModel& model, const VectorXd& theta_hat, const VectorXd& x_k,
                  const ReferenceTrajectory& ref, long k, const MpcConfig& config,
                  const Sequence& warm_start);

/// Central differences of the analytic gradient at the solution, symmetrized.
HessianCheck check_hessian_pd(const ParametricModel& model, const VectorXd& theta_hat,
                              const MpcSolution& solution,
                              const ReferenceTrajectory& ref, long k, const MpcConfig& config);

}  // namespace ampc
