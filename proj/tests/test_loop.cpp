#include "support.hpp"

#include <doctest.h>

using namespace ampc;

namespace {

ExperimentConfig quick_experiment(double w_bar, std::uint64_t seed, int K = 120) {
  auto exp = fixtures::scalar_experiment(w_bar, seed);
  exp.K_total = K;
  exp.mpc.hessian_check = HessianCheckMode::Off;
  return exp;
}

bool same_rows(const SimTrace& a, const SimTrace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    const auto& r = a.rows[k];
    const auto& s = b.rows[k];
    if (r.x != s.x || r.u != s.u || r.theta_hat != s.theta_hat || r.w != s.w || r.value != s.value) {
      return false;
    }
  }
  return a.theta_final == b.theta_final;
}

}  // namespace

TEST_CASE("uniform disturbance stays in its bound and is reproducible") {
  UniformNoise a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const VectorXd wa = a.draw(3, 0.2);
    CHECK(wa.cwiseAbs().maxCoeff() <= 0.2);
    CHECK(wa == b.draw(3, 0.2));
    if (wa != c.draw(3, 0.2)) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("a run is a pure function of config and seed") {
  const auto exp = quick_experiment(0.2, 3);
  const auto t1 = run(exp);
  const auto t2 = run(exp);
  CHECK(same_rows(t1, t2));
  CHECK(t1.rows.size() == static_cast<std::size_t>(exp.K_total));
  CHECK(t1.generator == std::string(kNoiseGenerator));
  auto other = exp;
  other.seed = 4;
  CHECK_FALSE(same_rows(t1, run(other)));
}

TEST_CASE("controller uses the initial estimate during warm-up") {
  const auto exp = quick_experiment(0.2, 1, 40);
  const auto trace = run(exp);
  for (const auto& row : trace.rows) {
    if (row.k < exp.reference.M) {
      CHECK(row.theta_ctrl == exp.rls.theta_hat_0);
    } else {
      CHECK(row.theta_ctrl == row.theta_hat);
    }
  }
  // The estimator ingests data from the first step.
  CHECK(trace.rows[1].theta_hat != exp.rls.theta_hat_0);
}

TEST_CASE("exact model on a feasible reference tracks it exactly") {
  auto exp = quick_experiment(0.0, 1, 100);
  exp.model = exp.model.with_w_bar(0.0);
  exp.rls.theta_hat_0 = exp.model.theta_true();
  const auto trace = run(exp);
  REQUIRE_FALSE(trace.aborted);
  for (const auto& row : trace.rows) {
    CHECK(row.tracking_error <= 1e-9);
    CHECK(row.theta_err <= 1e-12);  // innovations are at rounding level
  }
}

TEST_CASE("zero-noise estimate converges exponentially") {
  auto exp = quick_experiment(0.0, 1, 160);
  exp.model = exp.model.with_w_bar(0.0);
  const auto trace = run(exp);
  REQUIRE_FALSE(trace.aborted);
  CHECK(trace.rows[150].theta_err < 1e-6);
  const auto s = summarize(trace, exp);
  CHECK(s.theta_err_log_slope <= 0.5 * std::log(exp.rls.lambda) + 0.05);
}

TEST_CASE("fixed-theta ablation never updates the estimate") {
  auto exp = quick_experiment(0.2, 2, 60);
  exp.fixed_theta = true;
  const auto trace = run(exp);
  for (const auto& row : trace.rows) {
    CHECK(row.theta_hat == exp.rls.theta_hat_0);
    CHECK(row.theta_ctrl == exp.rls.theta_hat_0);
  }
}

TEST_CASE("PE monitor keeps its running sum exact") {
  std::mt19937_64 rng(6);
  PeMonitor mon(4, 3, 0.01);
  std::deque<MatrixXd> last;
  for (int k = 0; k < 50; ++k) {
    const MatrixXd phi = fixtures::random_matrix(rng, 3, 2, 1e3);
    const auto r = mon.update(phi);
    last.push_back(phi);
    if (last.size() > 4) last.pop_front();
    MatrixXd expect = MatrixXd::Zero(3, 3);
    for (const auto& p : last) expect += p * p.transpose();
    CHECK((mon.window_sum() - mon.recompute_sum()).norm() <= 1e-12 * expect.norm());
    CHECK((mon.window_sum() - expect).norm() <= 1e-12 * expect.norm());
    CHECK(r.full == (k >= 3));
  }
}

TEST_CASE("identical rank-one regressors are not exciting") {
  PeMonitor mon(4, 2, 1e-6);
  MatrixXd phi(2, 1);
  phi << 1.0, 2.0;
  PeMonitor::Reading r;
  for (int k = 0; k < 8; ++k) r = mon.update(phi);
  CHECK(std::abs(r.lambda_min) < 1e-12);
  CHECK_FALSE(r.is_pe_now);
  CHECK_FALSE(mon.k_pe().has_value());
}

TEST_CASE("k_PE is the step after the last violation") {
  PeMonitor mon(2, 1, 0.5);
  const MatrixXd one = MatrixXd::Constant(1, 1, 1.0);
  const MatrixXd zero = MatrixXd::Zero(1, 1);
  mon.update(one);   // 0: not full
  mon.update(one);   // 1: ok
  mon.update(zero);  // 2: window {1, 0} = 1, ok
  mon.update(zero);  // 3: window {0, 0}, violation
  mon.update(one);   // 4: ok
  mon.update(one);   // 5: ok
  REQUIRE(mon.k_pe().has_value());
  CHECK(*mon.k_pe() == 4);
  mon.update(zero);
  mon.update(zero);
  CHECK_FALSE(mon.k_pe().has_value());
}

TEST_CASE("serial and parallel sweeps agree and match single runs") {
  std::vector<ExperimentConfig> cfgs;
  for (std::uint64_t s = 1; s <= 4; ++s) cfgs.push_back(quick_experiment(0.2, s, 60));
  const auto serial = sweep(cfgs, Execution::Serial);
  const auto parallel = sweep(cfgs, Execution::Parallel);
  REQUIRE(serial.size() == cfgs.size());
  REQUIRE(parallel.size() == cfgs.size());
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const auto single = summarize(run(cfgs[i]), cfgs[i]);
    CHECK(serial[i].seed == cfgs[i].seed);
    CHECK(serial[i].steady_theta_err == single.steady_theta_err);
    CHECK(parallel[i].steady_theta_err == single.steady_theta_err);
    CHECK(parallel[i].final_theta_err == serial[i].final_theta_err);
    CHECK(parallel[i].k_pe == serial[i].k_pe);
  }
}

TEST_CASE("document sweep without overrides equals a single run") {
  auto doc = fixtures::scalar_document(0.2);
  doc["sim"]["K_total"] = 60;
  doc["mpc"]["hessian_check"] = "off";
  const auto out = sweep(doc, {}, Execution::Serial);
  REQUIRE(out.size() == 1);
  const auto cfg = parse_config(doc);
  const auto exp = make_experiment(cfg, resolve_reference(cfg).trajectory);
  const auto single = summarize(run(exp), exp);
  CHECK(out[0].final_theta_err == single.final_theta_err);
  CHECK(out[0].steady_theta_err == single.steady_theta_err);
}

TEST_CASE("failed runs are recorded and the sweep continues") {
  auto doc = fixtures::scalar_document(0.2);
  doc["sim"]["K_total"] = 20;
  doc["mpc"]["hessian_check"] = "off";
  const std::vector<OverrideSet> variants{
      {{"model.theta_true", Json::array({1.0, 0.1})}, {"reference.u_s", Json::array({0.0})},
       {"reference.x_guess", Json::array({0.0})}},
      {}};
  const auto out = sweep(doc, variants, Execution::Serial);
  REQUIRE(out.size() == 2);
  CHECK(out[0].aborted);
  CHECK_FALSE(out[0].abort_reason.empty());
  CHECK_FALSE(out[1].aborted);
}

TEST_CASE("uncertified reference is refused unless explicitly allowed") {
  auto exp = quick_experiment(0.0, 1, 50);
  exp.reference.pe.reset();
  CHECK_THROWS_AS(run(exp), ConfigError);
}

TEST_CASE("constant reference at the origin never excites the estimator") {
  const auto model = fixtures::scalar_bilinear(1.0, 0.1, 0.0);
  const VectorXd zero = VectorXd::Zero(1);
  auto ref = fixtures::make_reference(Sequence(4, zero), Sequence(4, zero));
  certify_pe(model, model.theta_true(), ref);
  ExperimentConfig exp{.model = model, .reference = ref};
  exp.mpc = fixtures::mpc_config(MatrixXd::Constant(1, 1, 6.0), MatrixXd::Constant(1, 1, 0.1), 4);
  exp.mpc.hessian_check = HessianCheckMode::Off;
  exp.rls.T = MatrixXd::Identity(1, 1);
  exp.rls.P_init = 10.0 * MatrixXd::Identity(2, 2);
  exp.rls.theta_hat_0 = VectorXd(2);
  exp.rls.theta_hat_0 << 1.5, -0.4;
  exp.K_total = 200;
  exp.allow_uncertified = true;
  const auto trace = run(exp);
  REQUIRE_FALSE(trace.aborted);
  CHECK_FALSE(trace.k_pe.has_value());
  const double err0 = trace.rows.front().theta_err;
  for (const auto& row : trace.rows) {
    if (!std::isnan(row.pe_lambda_min)) CHECK(row.pe_lambda_min == 0.0);
    CHECK(row.theta_err == err0);
  }
}
