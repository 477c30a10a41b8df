#include "ampc/refgen.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ampc {
namespace {

constexpr double kSingularRel = 1e-12;

double sigma_min(const MatrixXd& J) {
  Eigen::JacobiSVD<MatrixXd> svd(J);
  return svd.singularValues().minCoeff();
}

struct Rollout {
  Sequence x;        // M+1 states
  MatrixXd monodromy; // d x_M / d x_0
};

Rollout roll_period(const ParametricModel& model, const VectorXd& theta, const Sequence& u_r,
                    const VectorXd& x0) {
  Rollout r;
  r.x.reserve(u_r.size() + 1);
  r.x.push_back(x0);
  r.monodromy = MatrixXd::Identity(model.n(), model.n());
  for (const auto& u : u_r) {
    const auto& x = r.x.back();
    r.monodromy = step_jacobian(model, x, u, theta).A * r.monodromy;
    r.x.push_back(step(model, x, u, theta));
  }
  return r;
}

}  // namespace

bool pe_passes(double alpha, double beta, double rel) {
  return alpha > 0.0 && std::isfinite(beta) && alpha >= rel * std::max(1.0, beta);
}

Equilibrium find_equilibrium(const ParametricModel& model, const VectorXd& theta,
                             const VectorXd& u_s, const VectorXd& x_guess,
                             const NewtonOptions& opts) {
  check_dimensions(model, x_guess, u_s);
  const int n = model.n();
  VectorXd x = x_guess;
  auto residual_of = [&](const VectorXd& xx) -> VectorXd { return step(model, xx, u_s, theta) - xx; };
  VectorXd res = residual_of(x);
  std::vector<VectorXd> history{x};

  for (int it = 0; it < opts.max_iter; ++it) {
    // Checked before the convergence test too: a fixed point with a unit
    // eigenvalue is rejected even when the guess already solves it.
    const MatrixXd A = step_jacobian(model, x, u_s, theta).A;
    const MatrixXd J = A - MatrixXd::Identity(n, n);
    if (sigma_min(J) <= kSingularRel * std::max(1.0, A.norm())) {
      throw Error(ErrorCode::EigenvalueOneAtEquilibrium,
                  "find_equilibrium: df/dx - I is singular (eigenvalue one of A)");
    }
    if (res.norm() <= opts.tol) return {x, u_s, res.norm()};
    const VectorXd dx = J.fullPivLu().solve(-res);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
      const VectorXd trial = x + t * dx;
      const VectorXd trial_res = residual_of(trial);
      if (trial_res.allFinite() && trial_res.norm() < res.norm()) {
        x = trial;
        res = trial_res;
        accepted = true;
        break;
      }
    }
    history.push_back(x);
    if (!accepted) break;
  }
  if (res.norm() <= opts.tol) return {x, u_s, res.norm()};
  throw Error(ErrorCode::NoEquilibriumFound,
              "find_equilibrium: no convergence, residual " + std::to_string(res.norm()));
}

ReferenceTrajectory periodic_shoot(const ParametricModel& model, const VectorXd& theta,
                                   const Sequence& u_r, const VectorXd& x_guess,
                                   const NewtonOptions& opts) {
  if (u_r.empty()) throw ConfigError("periodic_shoot: period M must be >= 1");
  for (const auto& u : u_r) check_dimensions(model, x_guess, u);
  const int n = model.n();

  VectorXd x0 = x_guess;
  Rollout roll = roll_period(model, theta, u_r, x0);
  VectorXd G = x0 - roll.x.back();
  std::vector<VectorXd> history{x0};

  for (int it = 0; it < opts.max_iter; ++it) {
    if (!G.allFinite()) break;
    const MatrixXd J = MatrixXd::Identity(n, n) - roll.monodromy;
    if (sigma_min(J) <= kSingularRel * std::max(1.0, roll.monodromy.norm())) {
      throw Error(ErrorCode::PeriodicityJacobianSingular,
                  "periodic_shoot: I - dPhi/dx0 is singular");
    }
    if (G.norm() <= opts.tol) break;
    const VectorXd dx = J.fullPivLu().solve(-G);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
      const VectorXd trial = x0 + t * dx;
      Rollout trial_roll = roll_period(model, theta, u_r, trial);
      const VectorXd trial_G = trial - trial_roll.x.back();
      if (trial_G.allFinite() && trial_G.norm() < G.norm()) {
        x0 = trial;
        roll = std::move(trial_roll);
        G = trial_G;
        accepted = true;
        break;
      }
    }
    history.push_back(x0);
    // Stagnation at round-off level is acceptable; checked below.
    if (!accepted) break;
  }

  const double scale = std::max(1.0, x0.norm());
  if (!G.allFinite() || G.norm() > 1e-9 * scale) {
    throw ShootingDiverged("periodic_shoot: no periodic solution found, residual " +
                               std::to_string(G.norm()),
                           std::move(history));
  }

  ReferenceTrajectory traj;
  traj.M = static_cast<int>(u_r.size());
  traj.u_r = u_r;
  traj.x_r.assign(roll.x.begin(), roll.x.end() - 1);
  traj.feasibility_residual = G.norm();
  return traj;
}

MatrixXd periodic_sensitivity(const ParametricModel& model, const VectorXd& theta,
                              const ReferenceTrajectory& traj) {
  const int n = model.n();
  const int m = model.m();
  const int M = traj.M;
  std::vector<MatrixXd> A(M), B(M);
  for (int k = 0; k < M; ++k) {
    auto jac = step_jacobian(model, traj.x_r[k], traj.u_r[k], theta);
    A[k] = std::move(jac.A);
    B[k] = std::move(jac.B);
  }
  // dPhi/du_k = A_{M-1} ... A_{k+1} B_k, accumulated from the back.
  MatrixXd dPhi_du(n, M * m);
  MatrixXd tail = MatrixXd::Identity(n, n);
  for (int k = M - 1; k >= 0; --k) {
    dPhi_du.block(0, k * m, n, m) = tail * B[k];
    tail = tail * A[k];
  }
  const MatrixXd J = MatrixXd::Identity(n, n) - tail;
  return J.fullPivLu().solve(dPhi_du);
}

ReachabilityReport output_reachability(const Linearization& lin) {
  const auto n = lin.A.rows();
  const auto m = lin.B.cols();
  ReachabilityReport report;
  for (std::size_t i = 0; i < lin.C.size(); ++i) {
    const MatrixXd& C = lin.C[i];
    const MatrixXd& D = lin.D[i];
    const auto S = C.rows();
    RowReachability row;
    row.matrix.resize(S, m * (n + 1));
    row.matrix.leftCols(m) = D;
    MatrixXd AkB = lin.B;
    for (Eigen::Index k = 0; k < n; ++k) {
      row.matrix.block(0, m * (k + 1), S, m) = C * AkB;
      AkB = lin.A * AkB;
    }
    const double scale = static_cast<double>(S);
    row.rank = numerical_rank(row.matrix, scale);
    row.output_reachable = row.rank == S;
    row.saturation_index = static_cast<int>(n);
    for (Eigen::Index k = 0; k <= n; ++k) {
      if (numerical_rank(row.matrix.leftCols(m * (k + 1)), scale) == row.rank) {
        row.saturation_index = static_cast<int>(k);
        break;
      }
    }
    if (row.output_reachable && !report.any_reachable) {
      report.any_reachable = true;
      report.witness = static_cast<int>(i);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

PeCertificate window_certificate(const std::vector<MatrixXd>& phis, int window,
                                 double rel_threshold) {
  if (window <= 0) throw Error(ErrorCode::WindowTooShort, "PE window length must be >= 1");
  PeCertificate cert;
  cert.M = window;
  const int period = static_cast<int>(phis.size());
  if (period == 0) return cert;
  const auto S = phis.front().rows();
  cert.alpha = std::numeric_limits<double>::infinity();
  cert.beta = 0.0;
  for (int j = 0; j < period; ++j) {
    MatrixXd G = MatrixXd::Zero(S, S);
    for (int t = 0; t < window; ++t) {
      const auto& phi = phis[static_cast<std::size_t>((j + t) % period)];
      G.noalias() += phi * phi.transpose();
    }
    const auto eb = symmetric_eigen_bounds(G);
    cert.per_window.push_back(eb);
    cert.alpha = std::min(cert.alpha, eb.min);
    cert.beta = std::max(cert.beta, eb.max);
  }
  cert.pass = pe_passes(cert.alpha, cert.beta, rel_threshold);
  return cert;
}

InputPeResult pe_input_check(const Sequence& u_r, const VectorXd& u_s, int window) {
  if (window <= 0) {
    throw Error(ErrorCode::WindowTooShort, "pe_input_check: window M - d must be >= 1");
  }
  std::vector<MatrixXd> du;
  du.reserve(u_r.size());
  for (const auto& u : u_r) du.emplace_back(u - u_s);
  const auto cert = window_certificate(du, window);
  return {cert.alpha, cert.beta, cert.pass};
}

PeCertificate certify_pe(const ParametricModel& model, const VectorXd& theta,
                         ReferenceTrajectory& traj, double rel_threshold) {
  (void)theta;  // the regressor does not depend on theta
  std::vector<MatrixXd> phis;
  phis.reserve(static_cast<std::size_t>(traj.M));
  for (int k = 0; k < traj.M; ++k) phis.push_back(regressor(model, traj.x_r[k], traj.u_r[k]).phi);
  auto cert = window_certificate(phis, traj.M, rel_threshold);
  traj.pe = cert;
  return cert;
}

Sequence input_perturbation(int M, int m, double amplitude, InputShape shape) {
  Sequence du(static_cast<std::size_t>(M), VectorXd::Zero(m));
  if (shape == InputShape::Sinusoid) {
    for (int k = 0; k < M; ++k) {
      for (int c = 0; c < m; ++c) {
        const double phase = 2.0 * std::numbers::pi * c / (m * M);
        du[k](c) = amplitude * std::sin(2.0 * std::numbers::pi * k / M + phase);
      }
    }
    return du;
  }
  // 16-bit Fibonacci LFSR (taps 16, 14, 13, 11); channel c reads bits
  // starting at offset c * M.
  std::uint16_t lfsr = 0xACE1u;
  std::vector<int> bits(static_cast<std::size_t>(M * m));
  for (auto& b : bits) {
    const std::uint16_t bit = ((lfsr >> 0) ^ (lfsr >> 2) ^ (lfsr >> 3) ^ (lfsr >> 5)) & 1u;
    lfsr = static_cast<std::uint16_t>((lfsr >> 1) | (bit << 15));
    b = lfsr & 1u;
  }
  for (int c = 0; c < m; ++c) {
    bool all_same = true;
    for (int k = 0; k < M; ++k) {
      du[k](c) = bits[static_cast<std::size_t>(c * M + k)] ? amplitude : -amplitude;
      if (k > 0 && du[k](c) != du[0](c)) all_same = false;
    }
    if (all_same && M > 1) du[M - 1](c) = -du[M - 1](c);
  }
  return du;
}

GenerationReport generate_pe_reference(const ParametricModel& model, const VectorXd& theta,
                                       const Equilibrium& eq, int M, double amplitude,
                                       InputShape shape) {
  if (M < model.n()) {
    throw ConfigError("generate_pe_reference: period M must be >= n");
  }
  GenerationReport out;
  out.linearization = linearize(model, eq.x_s, eq.u_s, theta);
  out.reachability = output_reachability(out.linearization);
  if (!out.reachability.any_reachable) {
    throw GenerationError(ErrorCode::GenerationFailed, "output_reachability",
                          "no state row (A, B, C_i, D_i) is output reachable");
  }

  Eigen::EigenSolver<MatrixXd> es(out.linearization.A, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()(i) - 1.0) <= 1e-9) {
      throw GenerationError(ErrorCode::EigenvalueOneAtEquilibrium, "spectrum",
                            "linearization has an eigenvalue at one");
    }
  }

  const int d = out.reachability.rows[static_cast<std::size_t>(out.reachability.witness)]
                    .saturation_index;
  out.window = M - d;
  const Sequence du = input_perturbation(M, model.m(), amplitude, shape);
  Sequence u_r;
  u_r.reserve(du.size());
  for (const auto& d_u : du) u_r.emplace_back(eq.u_s + d_u);

  try {
    out.input_pe = pe_input_check(u_r, eq.u_s, out.window);
  } catch (const Error& e) {
    throw GenerationError(e.code(), "input_pe", e.what());
  }
  if (!out.input_pe.pass) {
    throw GenerationError(ErrorCode::CertificationFailed, "input_pe",
                          "input perturbation is not persistently exciting (alpha_u = " +
                              std::to_string(out.input_pe.alpha_u) + ")");
  }

  try {
    out.trajectory = periodic_shoot(model, theta, u_r, eq.x_s);
  } catch (const Error& e) {
    throw GenerationError(e.code(), "shooting", e.what());
  }

  const auto cert = certify_pe(model, theta, out.trajectory);
  if (!cert.pass) {
    throw GenerationError(ErrorCode::CertificationFailed, "certification",
                          "regressor along the trajectory is not PE (alpha = " +
                              std::to_string(cert.alpha) + ")",
                          cert);
  }
  return out;
}

}  // namespace ampc
