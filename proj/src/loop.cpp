#include "ampc/loop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ampc {

VectorXd UniformNoise::draw(int n, double w_bar) {
  VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
    w(i) = w_bar * (2.0 * unit - 1.0);
  }
  return w;
}

PeMonitor::PeMonitor(int window, int S, double threshold)
    : window_(window), threshold_(threshold), sum_(MatrixXd::Zero(S, S)) {
  if (window < 1) throw Error(ErrorCode::WindowTooShort, "PE monitor window must be >= 1");
}

MatrixXd PeMonitor::recompute_sum() const {
  MatrixXd s = MatrixXd::Zero(sum_.rows(), sum_.cols());
  for (const auto& phi : buffer_) s.noalias() += phi * phi.transpose();
  return s;
}

PeMonitor::Reading PeMonitor::update(const MatrixXd& phi) {
  ++step_;
  buffer_.push_back(phi);
  sum_.noalias() += phi * phi.transpose();
  if (static_cast<int>(buffer_.size()) > window_) {
    const MatrixXd& old = buffer_.front();
    sum_.noalias() -= old * old.transpose();
    buffer_.pop_front();
  }
  if ((step_ + 1) % window_ == 0) sum_ = recompute_sum();

  Reading r;
  r.full = static_cast<int>(buffer_.size()) == window_;
  const auto eb = symmetric_eigen_bounds(sum_);
  r.lambda_min = eb.min;
  r.lambda_max = eb.max;
  r.is_pe_now = r.full && eb.min >= threshold_ && eb.min > 0.0;
  if (!r.is_pe_now) last_violation_ = step_;
  last_ok_ = r.is_pe_now;
  return r;
}

std::optional<long> PeMonitor::k_pe() const {
  if (!last_ok_) return std::nullopt;
  return last_violation_ + 1;
}

namespace {

double default_threshold(const ReferenceTrajectory& ref) {
  if (ref.pe && ref.pe->alpha > 0.0) return 0.5 * ref.pe->alpha;
  return kPeRelativeThreshold;
}

}  // namespace

SimTrace run(const ExperimentConfig& cfg) {
  const auto& model = cfg.model;
  const auto& ref = cfg.reference;
  const int n = model.n();
  const int M = ref.M;
  cfg.mpc.validate(n, model.m());
  if (M < 1) throw ConfigError("loop: reference trajectory is empty");
  if (!cfg.allow_uncertified && !(ref.pe && ref.pe->pass)) {
    throw ConfigError("loop: reference trajectory is not certified PE "
                      "(set allow_uncertified for negative-control runs)");
  }
  if (cfg.K_total < 1) throw ConfigError("sim.K_total must be >= 1");
  if (cfg.rls.theta_hat_0.size() != model.S()) {
    throw ConfigError("rls.theta_hat_0 must have length S");
  }

  RlsState rls = RlsState::initial(cfg.rls.theta_hat_0, cfg.rls.P_init, cfg.rls.lambda, cfg.rls.T);
  PeMonitor monitor(M, model.S(), cfg.pe_threshold.value_or(default_threshold(ref)));
  UniformNoise noise(cfg.seed);

  SimTrace trace;
  trace.n = n;
  trace.m = model.m();
  trace.S = model.S();
  trace.seed = cfg.seed;
  trace.pe_threshold = monitor.threshold();
  trace.rows.reserve(static_cast<std::size_t>(cfg.K_total));

  VectorXd x = cfg.x0.size() == n ? cfg.x0 : ref.x_at(0);
  Sequence warm = reference_inputs(ref, 0, cfg.mpc.N);

  for (long k = 0; k < cfg.K_total; ++k) {
    TraceRow row;
    row.k = k;
    row.x = x;
    row.x_r = ref.x_at(k);
    row.u_r = ref.u_at(k);
    row.tracking_error = (x - row.x_r).norm();
    row.theta_hat = rls.theta_hat;
    row.theta_err = (model.theta_true() - rls.theta_hat).norm();
    row.theta_ctrl = (k < M || cfg.fixed_theta) ? cfg.rls.theta_hat_0 : rls.theta_hat;

    MpcSolution sol;
    try {
      sol = solve(model, row.theta_ctrl, x, ref, k, cfg.mpc, warm);
    } catch (const Error& e) {
      trace.aborted = true;
      trace.abort_reason = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
    row.u = sol.first_input;
    row.value = sol.value;
    row.mpc_iterations = sol.iterations;
    row.grad_norm = sol.grad_norm;
    const bool check = cfg.mpc.hessian_check == HessianCheckMode::Strict ||
                       (cfg.mpc.hessian_check == HessianCheckMode::Fast && k % M == 0);
    if (check) {
      row.hessian_lambda_min =
          check_hessian_pd(model, row.theta_ctrl, sol, ref, k, cfg.mpc).lambda_min;
    }

    row.w = noise.draw(n, model.w_bar());
    const VectorXd x_next = step(model, x, row.u, model.theta_true(), row.w);
    if (!x_next.allFinite()) {
      trace.aborted = true;
      trace.abort_reason = "step " + std::to_string(k) + ": non-finite state";
      break;
    }

    const MatrixXd phi = regressor(model, x, row.u).phi;
    const VectorXd f0 = model.f0().evaluate(x, row.u);
    row.innovation_norm = predict_error(rls, phi, x_next, f0).norm();
    if (!cfg.fixed_theta) {
      try {
        rls = rls_update(rls, phi, x_next, f0);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::IllConditionedUpdate) throw;
        ++trace.skipped_updates;
      }
    }
    const auto reading = monitor.update(phi);
    if (reading.full) {
      row.pe_lambda_min = reading.lambda_min;
      row.pe_lambda_max = reading.lambda_max;
    }

    trace.rows.push_back(std::move(row));
    x = x_next;
    warm = shift_warm_start(sol.u_star);
  }
  trace.theta_final = rls.theta_hat;
  trace.k_pe = monitor.k_pe();
  return trace;
}

RunSummary summarize(const SimTrace& trace, const ExperimentConfig& cfg) {
  RunSummary s;
  s.seed = trace.seed;
  s.aborted = trace.aborted;
  s.abort_reason = trace.abort_reason;
  s.k_pe = trace.k_pe;
  if (trace.rows.empty()) return s;
  const VectorXd& theta = cfg.model.theta_true();
  s.final_theta_err = (theta - trace.theta_final).norm();

  const auto K = static_cast<long>(trace.rows.size());
  const long steady = std::min<long>(cfg.steady_window, K);
  for (long k = K - steady; k < K; ++k) s.steady_theta_err += trace.rows[k].theta_err;
  s.steady_theta_err /= static_cast<double>(steady);

  const long last = std::min<long>(cfg.reference.M, K);
  for (long k = K - last; k < K; ++k) s.mean_tracking_error += trace.rows[k].tracking_error;
  s.mean_tracking_error /= static_cast<double>(last);

  const long from = trace.k_pe.value_or(0);
  s.worst_window_lambda_min = std::numeric_limits<double>::infinity();
  for (long k = from; k < K; ++k) {
    const double v = trace.rows[k].pe_lambda_min;
    if (!std::isnan(v)) s.worst_window_lambda_min = std::min(s.worst_window_lambda_min, v);
  }
  if (!std::isfinite(s.worst_window_lambda_min)) s.worst_window_lambda_min = 0.0;

  // Least-squares slope of log|theta~| over the transient after the
  // controller switch, stopping at the first value below 1e-12.
  std::vector<double> ks, ls;
  for (long k = cfg.reference.M; k < std::min<long>(K, cfg.reference.M + 50); ++k) {
    const double e = trace.rows[k].theta_err;
    if (e < 1e-12) break;
    ks.push_back(static_cast<double>(k));
    ls.push_back(std::log(e));
  }
  if (ks.size() >= 2) {
    const double mk = std::accumulate(ks.begin(), ks.end(), 0.0) / ks.size();
    const double ml = std::accumulate(ls.begin(), ls.end(), 0.0) / ls.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      num += (ks[i] - mk) * (ls[i] - ml);
      den += (ks[i] - mk) * (ks[i] - mk);
    }
    s.theta_err_log_slope = num / den;
  }
  return s;
}

}  // namespace ampc
