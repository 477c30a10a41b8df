#pragma once

// Fixtures shared by the unit and acceptance tests.

#include "ampc/config.hpp"

#include <random>

namespace fixtures {

using ampc::MatrixXd;
using ampc::Monomial;
using ampc::ParametricModel;
using ampc::PolynomialMap;
using ampc::VectorXd;

inline Monomial mono(double c, std::vector<int> xp, std::vector<int> up) {
  return Monomial{c, std::move(xp), std::move(up)};
}

/// x+ = u + theta1 x + theta2 x u + w
inline ParametricModel scalar_bilinear(double theta1 = 1.1, double theta2 = 0.1,
                                       double w_bar = 0.2) {
  PolynomialMap f0{{{mono(1.0, {0}, {1})}}};
  PolynomialMap f1{{{mono(1.0, {1}, {0})}}};
  PolynomialMap f2{{{mono(1.0, {1}, {1})}}};
  VectorXd theta(2);
  theta << theta1, theta2;
  return ParametricModel(1, 1, f0, {f1, f2}, theta, w_bar);
}

/// Row r of A x + B u as a monomial list.
inline PolynomialMap affine_map(const MatrixXd& A, const MatrixXd& B) {
  const auto n = static_cast<int>(A.rows());
  const auto m = static_cast<int>(B.cols());
  PolynomialMap map;
  for (int r = 0; r < n; ++r) {
    std::vector<Monomial> row;
    for (int i = 0; i < n; ++i) {
      if (A(r, i) == 0.0) continue;
      std::vector<int> xp(n, 0);
      xp[i] = 1;
      row.push_back(mono(A(r, i), xp, std::vector<int>(m, 0)));
    }
    for (int c = 0; c < m; ++c) {
      if (B(r, c) == 0.0) continue;
      std::vector<int> up(m, 0);
      up[c] = 1;
      row.push_back(mono(B(r, c), std::vector<int>(n, 0), up));
    }
    map.rows.push_back(std::move(row));
  }
  return map;
}

/// Linear plant x+ = (A0 + sum theta_j Aj) x + (B0 + sum theta_j Bj) u.
struct LinearPlant {
  MatrixXd A0, B0;
  std::vector<MatrixXd> Aj, Bj;
  VectorXd theta;

  MatrixXd A() const {
    MatrixXd a = A0;
    for (std::size_t j = 0; j < Aj.size(); ++j) a += theta(static_cast<Eigen::Index>(j)) * Aj[j];
    return a;
  }
  MatrixXd B() const {
    MatrixXd b = B0;
    for (std::size_t j = 0; j < Bj.size(); ++j) b += theta(static_cast<Eigen::Index>(j)) * Bj[j];
    return b;
  }
  ParametricModel model(double w_bar = 0.0) const {
    std::vector<PolynomialMap> basis;
    for (std::size_t j = 0; j < Aj.size(); ++j) basis.push_back(affine_map(Aj[j], Bj[j]));
    return ParametricModel(static_cast<int>(A0.rows()), static_cast<int>(B0.cols()),
                           affine_map(A0, B0), basis, theta, w_bar);
  }
};

inline MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = d(rng);
  return M;
}

inline VectorXd random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

inline MatrixXd random_spd(std::mt19937_64& rng, int n) {
  const MatrixXd G = random_matrix(rng, n, n);
  return G * G.transpose() + 0.5 * MatrixXd::Identity(n, n);
}

/// Random linear plant with S parameters.
inline LinearPlant random_linear_plant(std::mt19937_64& rng, int n, int m, int S) {
  LinearPlant p;
  p.A0 = random_matrix(rng, n, n, 0.6);
  p.B0 = random_matrix(rng, n, m);
  for (int j = 0; j < S; ++j) {
    p.Aj.push_back(random_matrix(rng, n, n, 0.3));
    p.Bj.push_back(random_matrix(rng, n, m, 0.3));
  }
  p.theta = random_vector(rng, S);
  return p;
}

inline ampc::ReferenceTrajectory make_reference(const ampc::Sequence& x_r,
                                                const ampc::Sequence& u_r) {
  ampc::ReferenceTrajectory ref;
  ref.M = static_cast<int>(x_r.size());
  ref.x_r = x_r;
  ref.u_r = u_r;
  return ref;
}

inline ampc::MpcConfig mpc_config(const MatrixXd& Q, const MatrixXd& R, int N) {
  ampc::MpcConfig c;
  c.Q = Q;
  c.R = R;
  c.N = N;
  return c;
}

/// The scalar experiment used throughout: reference around (1, -0.09),
/// period 4, amplitude 0.3.
inline ampc::Json scalar_document(double w_bar = 0.2) {
  auto doc = ampc::Json::parse(R"({
    "model": {"n": 1, "m": 1,
      "f0": [[{"coeff": 1.0, "x_powers": [0], "u_powers": [1]}]],
      "basis": [[[{"coeff": 1.0, "x_powers": [1], "u_powers": [0]}]],
                [[{"coeff": 1.0, "x_powers": [1], "u_powers": [1]}]]],
      "theta_true": [1.1, 0.1], "w_bar": 0.2},
    "reference": {"mode": "generate", "u_s": [-0.09], "x_guess": [1.0], "M": 4, "amplitude": 0.3},
    "mpc": {"Q": [[6.0]], "R": [[0.1]], "N": 4},
    "rls": {"lambda": 0.9, "T": [[1.0]], "theta_hat_0": [1.5, -0.4]},
    "sim": {"K_total": 300, "seed": 1}
  })");
  doc["model"]["w_bar"] = w_bar;
  return doc;
}

/// Same plant with theta = [1, 0.1] and the reference built by optimization.
inline ampc::Json optimized_document() {
  auto doc = scalar_document();
  doc["model"]["theta_true"] = ampc::Json::array({1.0, 0.1});
  doc["reference"] = ampc::Json::parse(
      R"({"mode": "optimize", "M": 2, "alpha": 0.1, "beta": 0.3, "Q": [[6.0]], "R": [[0.1]]})");
  return doc;
}

inline ampc::ExperimentConfig scalar_experiment(double w_bar = 0.2, std::uint64_t seed = 1) {
  auto doc = scalar_document(w_bar);
  doc["sim"]["seed"] = seed;
  const auto cfg = ampc::parse_config(doc);
  return ampc::make_experiment(cfg, ampc::resolve_reference(cfg).trajectory);
}

}  // namespace fixtures
