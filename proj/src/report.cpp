#include "ampc/report.hpp"

#include <cmath>
#include <cstdio>

namespace ampc {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_vec(std::ostream& os, const VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << fmt17(v(i));
}

void indexed(std::vector<std::string>& cols, const std::string& stem, int count) {
  for (int i = 0; i < count; ++i) cols.push_back(stem + std::to_string(i));
}

}  // namespace

std::vector<std::string> trace_columns(int n, int m, int S) {
  std::vector<std::string> cols{"k"};
  indexed(cols, "x", n);
  indexed(cols, "u", m);
  indexed(cols, "x_r", n);
  indexed(cols, "u_r", m);
  cols.push_back("tracking_error");
  indexed(cols, "theta_hat", S);
  indexed(cols, "theta_ctrl", S);
  cols.insert(cols.end(), {"theta_err", "V_N", "mpc_iterations", "grad_norm",
                           "hessian_lambda_min", "innovation_norm", "pe_lambda_min",
                           "pe_lambda_max"});
  indexed(cols, "w", n);
  return cols;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << "# generator=" << trace.generator << " seed=" << trace.seed << '\n';
  const auto cols = trace_columns(trace.n, trace.m, trace.S);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : trace.rows) {
    os << r.k;
    put_vec(os, r.x);
    put_vec(os, r.u);
    put_vec(os, r.x_r);
    put_vec(os, r.u_r);
    os << ',' << fmt17(r.tracking_error);
    put_vec(os, r.theta_hat);
    put_vec(os, r.theta_ctrl);
    os << ',' << fmt17(r.theta_err) << ',' << fmt17(r.value) << ',' << r.mpc_iterations << ','
       << fmt17(r.grad_norm) << ',' << fmt17(r.hessian_lambda_min) << ','
       << fmt17(r.innovation_norm) << ',' << fmt17(r.pe_lambda_min) << ','
       << fmt17(r.pe_lambda_max);
    put_vec(os, r.w);
    os << '\n';
  }
}

void write_reference_csv(std::ostream& os, const ReferenceTrajectory& traj) {
  const auto n = traj.x_r.empty() ? 0 : traj.x_r.front().size();
  const auto m = traj.u_r.empty() ? 0 : traj.u_r.front().size();
  os << 'k';
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_r" << i;
  for (Eigen::Index i = 0; i < m; ++i) os << ",u_r" << i;
  os << '\n';
  for (int k = 0; k < traj.M; ++k) {
    os << k;
    put_vec(os, traj.x_r[k]);
    put_vec(os, traj.u_r[k]);
    os << '\n';
  }
}

Json to_json(const RunSummary& s) {
  Json j{{"seed", s.seed},
         {"aborted", s.aborted},
         {"final_theta_err", s.final_theta_err},
         {"steady_theta_err", s.steady_theta_err},
         {"mean_tracking_error", s.mean_tracking_error},
         {"worst_window_lambda_min", s.worst_window_lambda_min},
         {"theta_err_log_slope", s.theta_err_log_slope}};
  j["k_pe"] = s.k_pe ? Json(*s.k_pe) : Json(nullptr);
  if (s.aborted) j["abort_reason"] = s.abort_reason;
  return j;
}

CheckReport run_check(const ConfigFile& cfg) {
  const auto& model = cfg.model;
  const VectorXd theta = cfg.reference.theta.value_or(model.theta_true());
  VectorXd u_s = VectorXd::Zero(model.m());
  VectorXd x_guess = VectorXd::Zero(model.n());
  if (cfg.reference.mode == ReferenceMode::Generate) {
    u_s = cfg.reference.u_s;
    x_guess = cfg.reference.x_guess;
  }

  CheckReport rep;
  Equilibrium eq{x_guess, u_s, (step(model, x_guess, u_s, theta) - x_guess).norm()};
  try {
    eq = resolve_equilibrium(model, theta, u_s, x_guess);
    rep.equilibrium = eq;
  } catch (const Error& e) {
    // Report the hypotheses at the guess so the failure can be localized.
    rep.equilibrium_error = std::string(to_string(e.code())) + ": " + e.what();
  }

  const auto lin = linearize(model, eq.x_s, eq.u_s, theta);
  Eigen::EigenSolver<MatrixXd> es(lin.A, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    rep.eigenvalues.push_back(es.eigenvalues()(i));
    if (std::abs(es.eigenvalues()(i) - 1.0) <= 1e-9) rep.unit_eigenvalues.push_back(static_cast<int>(i));
  }
  const auto n = lin.A.rows();
  const auto m = lin.B.cols();
  MatrixXd ctrb(n, n * m);
  MatrixXd AkB = lin.B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = AkB;
    AkB = lin.A * AkB;
  }
  rep.controllability_rank = numerical_rank(ctrb, static_cast<double>(std::max(n, n * m)));
  rep.controllable = rep.controllability_rank == n;
  rep.reachability = output_reachability(lin);
  rep.existence_hypotheses = rep.equilibrium.has_value() && rep.controllable && rep.unit_eigenvalues.empty();
  rep.excitation_hypotheses = rep.reachability.any_reachable;
  return rep;
}

Json to_json(const CheckReport& rep) {
  Json j;
  if (rep.equilibrium) {
    Json xs = Json::array(), us = Json::array();
    for (Eigen::Index i = 0; i < rep.equilibrium->x_s.size(); ++i) xs.push_back(rep.equilibrium->x_s(i));
    for (Eigen::Index i = 0; i < rep.equilibrium->u_s.size(); ++i) us.push_back(rep.equilibrium->u_s(i));
    j["equilibrium"] = {{"x_s", xs}, {"u_s", us}, {"residual", rep.equilibrium->residual}};
  } else {
    j["equilibrium"] = nullptr;
    j["equilibrium_error"] = rep.equilibrium_error;
  }
  Json eig = Json::array();
  for (const auto& e : rep.eigenvalues) eig.push_back({{"re", e.real()}, {"im", e.imag()}});
  j["eigenvalues"] = eig;
  j["unit_eigenvalues"] = rep.unit_eigenvalues;
  j["controllability_rank"] = rep.controllability_rank;
  j["controllable"] = rep.controllable;
  j["reachability"] = to_json(rep.reachability);
  j["existence_hypotheses"] = rep.existence_hypotheses;
  j["excitation_hypotheses"] = rep.excitation_hypotheses;
  return j;
}

void print_check(std::ostream& os, const CheckReport& rep) {
  if (rep.equilibrium) {
    os << "equilibrium residual: " << fmt17(rep.equilibrium->residual) << '\n';
    os << "x_s:";
    for (Eigen::Index i = 0; i < rep.equilibrium->x_s.size(); ++i) os << ' ' << fmt17(rep.equilibrium->x_s(i));
    os << '\n';
  } else {
    os << "equilibrium: " << rep.equilibrium_error << '\n';
  }
  os << "eigenvalues of A:";
  for (const auto& e : rep.eigenvalues) {
    os << ' ' << e.real();
    if (e.imag() != 0.0) os << (e.imag() > 0 ? "+" : "") << e.imag() << 'i';
  }
  os << '\n';
  for (int i : rep.unit_eigenvalues) {
    os << "hypothesis violated: eigenvalue " << i << " of A equals 1\n";
  }
  os << "controllability rank: " << rep.controllability_rank
     << (rep.controllable ? " (controllable)" : " (not controllable)") << '\n';
  for (std::size_t i = 0; i < rep.reachability.rows.size(); ++i) {
    const auto& r = rep.reachability.rows[i];
    os << "row " << i << ": output reachability rank " << r.rank << " / " << r.matrix.rows()
       << (r.output_reachable ? " (output reachable)" : " (not output reachable)")
       << ", saturation index " << r.saturation_index << '\n';
  }
  os << "periodic-reference existence hypotheses: " << (rep.existence_hypotheses ? "hold" : "violated") << '\n';
  os << "PE-input-implies-PE-trajectory hypotheses: "
     << (rep.excitation_hypotheses ? "hold" : "violated") << '\n';
}

}  // namespace ampc
