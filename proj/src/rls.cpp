#include "ampc/rls.hpp"

#include <cmath>
#include <limits>

namespace ampc {

RlsState RlsState::initial(VectorXd theta_hat0, MatrixXd P_init, double lambda, MatrixXd T) {
  RlsState s{std::move(theta_hat0), std::move(P_init), lambda, std::move(T), 0};
  s.validate();
  return s;
}

void RlsState::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("rls.lambda must lie in (0, 1)");
  if (P.rows() != theta_hat.size() || !is_positive_definite(P)) {
    throw ConfigError("rls.P_init must be a symmetric positive definite S x S matrix");
  }
  if (!is_positive_definite(T)) throw ConfigError("rls.T must be symmetric positive definite");
}

VectorXd predict_error(const RlsState& state, const MatrixXd& phi, const VectorXd& x_next,
                       const VectorXd& f0_val) {
  return (x_next - f0_val) - phi.transpose() * state.theta_hat;
}

RlsState rls_update(const RlsState& state, const MatrixXd& phi, const VectorXd& x_next,
                    const VectorXd& f0_val) {
  const MatrixXd Pphi = state.P * phi;
  MatrixXd D = state.lambda * state.T + phi.transpose() * Pphi;
  D = 0.5 * (D + D.transpose()).eval();
  const auto eb = symmetric_eigen_bounds(D);
  if (!(eb.min > std::numeric_limits<double>::epsilon() * eb.max)) {
    throw Error(ErrorCode::IllConditionedUpdate, "rls_update: D is numerically singular");
  }
  const Eigen::LDLT<MatrixXd> ldlt(D);
  // Gain K = P phi D^{-1}, formed as (D^{-1} phi^T P)^T using the symmetry of D.
  const MatrixXd K = ldlt.solve(Pphi.transpose()).transpose();

  RlsState next = state;
  next.theta_hat = state.theta_hat + K * predict_error(state, phi, x_next, f0_val);
  next.P = (state.P - K * Pphi.transpose()) / state.lambda;
  next.P = 0.5 * (next.P + next.P.transpose()).eval();
  next.k = state.k + 1;
  return next;
}

}  // namespace ampc
