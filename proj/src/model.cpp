#include "ampc/model.hpp"

#include "ampc/error.hpp"

#include <cmath>
#include <string>

namespace ampc {
namespace {

// Integer power; exponents are small nonnegative integers.
double ipow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

double monomial_value(const Monomial& mono, const VectorXd& x, const VectorXd& u) {
  double v = mono.coeff;
  for (Eigen::Index i = 0; i < x.size(); ++i) v *= ipow(x(i), mono.x_powers[i]);
  for (Eigen::Index c = 0; c < u.size(); ++c) v *= ipow(u(c), mono.u_powers[c]);
  return v;
}

// d/d(var) of the monomial, where var indexes the concatenation (x, u).
double monomial_partial(const Monomial& mono, const VectorXd& x, const VectorXd& u,
                        Eigen::Index var) {
  const auto n = x.size();
  const bool in_x = var < n;
  const int p = in_x ? mono.x_powers[var] : mono.u_powers[var - n];
  if (p == 0) return 0.0;
  double v = mono.coeff * p;
  for (Eigen::Index i = 0; i < n; ++i) {
    v *= ipow(x(i), (in_x && i == var) ? mono.x_powers[i] - 1 : mono.x_powers[i]);
  }
  for (Eigen::Index c = 0; c < u.size(); ++c) {
    v *= ipow(u(c), (!in_x && c == var - n) ? mono.u_powers[c] - 1 : mono.u_powers[c]);
  }
  return v;
}

void validate_map(const PolynomialMap& map, int n, int m, const std::string& name) {
  if (static_cast<int>(map.rows.size()) != n) {
    throw ConfigError(name + ": expected " + std::to_string(n) + " rows, got " +
                      std::to_string(map.rows.size()));
  }
  for (const auto& row : map.rows) {
    for (const auto& mono : row) {
      if (static_cast<int>(mono.x_powers.size()) != n ||
          static_cast<int>(mono.u_powers.size()) != m) {
        throw ConfigError(name + ": monomial exponent vectors must have lengths n and m");
      }
      for (int p : mono.x_powers)
        if (p < 0) throw ConfigError(name + ": negative exponent");
      for (int p : mono.u_powers)
        if (p < 0) throw ConfigError(name + ": negative exponent");
      if (!std::isfinite(mono.coeff)) throw ConfigError(name + ": non-finite coefficient");
    }
  }
}

}  // namespace

VectorXd PolynomialMap::evaluate(const VectorXd& x, const VectorXd& u) const {
  VectorXd out = VectorXd::Zero(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& mono : rows[r]) out(static_cast<Eigen::Index>(r)) += monomial_value(mono, x, u);
  }
  return out;
}

MatrixXd PolynomialMap::jacobian_x(const VectorXd& x, const VectorXd& u) const {
  MatrixXd J = MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), x.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& mono : rows[r]) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        J(static_cast<Eigen::Index>(r), i) += monomial_partial(mono, x, u, i);
      }
    }
  }
  return J;
}

MatrixXd PolynomialMap::jacobian_u(const VectorXd& x, const VectorXd& u) const {
  MatrixXd J = MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), u.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& mono : rows[r]) {
      for (Eigen::Index c = 0; c < u.size(); ++c) {
        J(static_cast<Eigen::Index>(r), c) += monomial_partial(mono, x, u, x.size() + c);
      }
    }
  }
  return J;
}

ParametricModel::ParametricModel(int n, int m, PolynomialMap f0,
                                 std::vector<PolynomialMap> basis, VectorXd theta_true,
                                 double w_bar)
    : n_(n), m_(m), f0_(std::move(f0)), basis_(std::move(basis)),
      theta_true_(std::move(theta_true)), w_bar_(w_bar) {
  if (n_ < 1 || m_ < 1) throw ConfigError("model: n and m must be >= 1");
  if (basis_.empty()) throw ConfigError("model: at least one basis map (S >= 1) required");
  if (theta_true_.size() != S()) {
    throw ConfigError("model: theta_true has length " + std::to_string(theta_true_.size()) +
                      ", expected S = " + std::to_string(S()));
  }
  if (!(w_bar_ >= 0.0) || !std::isfinite(w_bar_)) throw ConfigError("model: w_bar must be >= 0");
  validate_map(f0_, n_, m_, "model.f0");
  for (std::size_t j = 0; j < basis_.size(); ++j) {
    validate_map(basis_[j], n_, m_, "model.basis[" + std::to_string(j) + "]");
  }
}

ParametricModel ParametricModel::with_w_bar(double w_bar) const {
  return ParametricModel(n_, m_, f0_, basis_, theta_true_, w_bar);
}

void check_dimensions(const ParametricModel& model, const VectorXd& x, const VectorXd& u) {
  if (x.size() != model.n() || u.size() != model.m()) {
    throw ConfigError("dimension mismatch: x has " + std::to_string(x.size()) + " (n=" +
                      std::to_string(model.n()) + "), u has " + std::to_string(u.size()) +
                      " (m=" + std::to_string(model.m()) + ")");
  }
}

VectorXd step(const ParametricModel& model, const VectorXd& x, const VectorXd& u,
              const VectorXd& theta, const VectorXd& w) {
  check_dimensions(model, x, u);
  if (theta.size() != model.S() || w.size() != model.n()) {
    throw ConfigError("dimension mismatch in step: theta or w");
  }
  VectorXd next = model.f0().evaluate(x, u) + w;
  for (int j = 0; j < model.S(); ++j) next += theta(j) * model.basis()[j].evaluate(x, u);
  return next;
}

VectorXd step(const ParametricModel& model, const VectorXd& x, const VectorXd& u,
              const VectorXd& theta) {
  return step(model, x, u, theta, VectorXd::Zero(model.n()));
}

Regressor regressor(const ParametricModel& model, const VectorXd& x, const VectorXd& u) {
  check_dimensions(model, x, u);
  Regressor reg{MatrixXd(model.S(), model.n())};
  for (int j = 0; j < model.S(); ++j) {
    reg.phi.row(j) = model.basis()[j].evaluate(x, u).transpose();
  }
  return reg;
}

Linearization linearize(const ParametricModel& model, const VectorXd& x_op,
                        const VectorXd& u_op, const VectorXd& theta) {
  check_dimensions(model, x_op, u_op);
  if (theta.size() != model.S()) throw ConfigError("dimension mismatch in linearize: theta");
  const int n = model.n();
  const int S = model.S();
  Linearization lin;
  lin.A = model.f0().jacobian_x(x_op, u_op);
  lin.B = model.f0().jacobian_u(x_op, u_op);
  for (int j = 0; j < S; ++j) {
    lin.Aj.push_back(model.basis()[j].jacobian_x(x_op, u_op));
    lin.Bj.push_back(model.basis()[j].jacobian_u(x_op, u_op));
    lin.A += theta(j) * lin.Aj.back();
    lin.B += theta(j) * lin.Bj.back();
  }
  for (int i = 0; i < n; ++i) {
    MatrixXd C(S, n);
    MatrixXd D(S, model.m());
    for (int j = 0; j < S; ++j) {
      C.row(j) = lin.Aj[j].row(i);
      D.row(j) = lin.Bj[j].row(i);
    }
    lin.C.push_back(std::move(C));
    lin.D.push_back(std::move(D));
  }
  return lin;
}

StepJacobian step_jacobian(const ParametricModel& model, const VectorXd& x, const VectorXd& u,
                           const VectorXd& theta) {
  StepJacobian jac{model.f0().jacobian_x(x, u), model.f0().jacobian_u(x, u)};
  for (int j = 0; j < model.S(); ++j) {
    jac.A += theta(j) * model.basis()[j].jacobian_x(x, u);
    jac.B += theta(j) * model.basis()[j].jacobian_u(x, u);
  }
  return jac;
}

}  // namespace ampc
