#pragma once

#include "ampc/error.hpp"
#include "ampc/linalg.hpp"

namespace ampc {

/// Multi-output recursive least squares with constant forgetting factor.
///
/// The state holds the pair (theta_hat_k, P_{k-1}): one update consumes the
/// data pair (phi_k, x~_{k+1}) and yields (theta_hat_{k+1}, P_k). After k
/// updates theta_hat equals the minimizer of
///
///   lambda^k |theta_hat_0 - theta|^2_{P_{-1}^{-1}}
///     + sum_{i=1}^{k} lambda^{k-i} |x~_i - phi_{i-1}^T theta|^2_{T^{-1}},
///
/// and P^{-1} obeys P_k^{-1} = lambda P_{k-1}^{-1} + phi_k T^{-1} phi_k^T.
struct RlsState {
  VectorXd theta_hat;
  MatrixXd P;
  double lambda = 0.9;
  MatrixXd T;
  long k = 0;

  static RlsState initial(VectorXd theta_hat0, MatrixXd P_init, double lambda, MatrixXd T);
  void validate() const;
};

/// x~ - phi^T theta_hat, evaluated before the update.
VectorXd predict_error(const RlsState& state, const MatrixXd& phi, const VectorXd& x_next,
                       const VectorXd& f0_val);

/// `phi` is S x n (see Regressor). Throws IllConditionedUpdate when
/// D = lambda T + phi^T P phi is numerically singular; the state is then
/// left untouched.
RlsState rls_update(const RlsState& state, const MatrixXd& phi, const VectorXd& x_next,
                    const VectorXd& f0_val);

}  // namespace ampc
