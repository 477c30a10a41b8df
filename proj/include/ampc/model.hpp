#pragma once

#include "ampc/linalg.hpp"

#include <vector>

namespace ampc {

/// coeff * prod_i x_i^{x_powers[i]} * prod_c u_c^{u_powers[c]}
struct Monomial {
  double coeff = 0.0;
  std::vector<int> x_powers;
  std::vector<int> u_powers;

  bool operator==(const Monomial&) const = default;
};

/// Vector-valued polynomial map R^n x R^m -> R^n, one monomial sum per row.
struct PolynomialMap {
  std::vector<std::vector<Monomial>> rows;

  VectorXd evaluate(const VectorXd& x, const VectorXd& u) const;
  MatrixXd jacobian_x(const VectorXd& x, const VectorXd& u) const;
  MatrixXd jacobian_u(const VectorXd& x, const VectorXd& u) const;

  bool operator==(const PolynomialMap&) const = default;
};

/// Discrete-time dynamics that are linear in an unknown parameter vector:
///
///   x+ = f_0(x, u) + sum_j theta_j f_j(x, u) + w.
///
/// Immutable after construction; every member function is const and
/// reentrant.
class ParametricModel {
 public:
  ParametricModel(int n, int m, PolynomialMap f0, std::vector<PolynomialMap> basis,
                  VectorXd theta_true, double w_bar);

  int n() const { return n_; }
  int m() const { return m_; }
  int S() const { return static_cast<int>(basis_.size()); }

  const PolynomialMap& f0() const { return f0_; }
  const std::vector<PolynomialMap>& basis() const { return basis_; }
  const VectorXd& theta_true() const { return theta_true_; }
  double w_bar() const { return w_bar_; }

  ParametricModel with_w_bar(double w_bar) const;

  bool operator==(const ParametricModel&) const = default;

 private:
  int n_;
  int m_;
  PolynomialMap f0_;
  std::vector<PolynomialMap> basis_;
  VectorXd theta_true_;
  double w_bar_;
};

/// Regressor in the estimator's orientation: `phi` is S x n and row j holds
/// f_{j+1}(x, u)^T, so that x+ = f_0 + phi^T theta + w.
struct Regressor {
  MatrixXd phi;
};

struct Linearization {
  MatrixXd A;                 // n x n, includes the f_0 contribution
  MatrixXd B;                 // n x m, includes the f_0 contribution
  std::vector<MatrixXd> Aj;   // per basis map, n x n
  std::vector<MatrixXd> Bj;   // per basis map, n x m
  std::vector<MatrixXd> C;    // per state row i, S x n; row j = row i of Aj[j]
  std::vector<MatrixXd> D;    // per state row i, S x m; row j = row i of Bj[j]
};

/// State-transition Jacobians at one point (no per-basis breakdown).
struct StepJacobian {
  MatrixXd A;
  MatrixXd B;
};

VectorXd step(const ParametricModel& model, const VectorXd& x, const VectorXd& u,
              const VectorXd& theta, const VectorXd& w);

/// Noise-free step.
VectorXd step(const ParametricModel& model, const VectorXd& x, const VectorXd& u,
              const VectorXd& theta);

Regressor regressor(const ParametricModel& model, const VectorXd& x, const VectorXd& u);

Linearization linearize(const ParametricModel& model, const VectorXd& x_op,
                        const VectorXd& u_op, const VectorXd& theta);

StepJacobian step_jacobian(const ParametricModel& model, const VectorXd& x,
                           const VectorXd& u, const VectorXd& theta);

void check_dimensions(const ParametricModel& model, const VectorXd& x, const VectorXd& u);

}  // namespace ampc
