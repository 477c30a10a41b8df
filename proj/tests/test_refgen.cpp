#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace ampc;

namespace {

VectorXd vec1(double v) { return VectorXd::Constant(1, v); }

Sequence scalar_inputs(double u_s, double amp, int M) {
  Sequence u;
  for (int k = 0; k < M; ++k) u.push_back(vec1(u_s + amp * std::sin(2.0 * std::numbers::pi * k / M)));
  return u;
}

// Periodic state of the scalar plant: x+ = a_k x + u_k with a_k = t1 + t2 u_k.
double scalar_periodic_state(double t1, double t2, const Sequence& u) {
  double a = 1.0, b = 0.0;
  for (const auto& uk : u) {
    const double ak = t1 + t2 * uk(0);
    a = ak * a;
    b = ak * b + uk(0);
  }
  return b / (1.0 - a);
}

}  // namespace

TEST_CASE("equilibrium of the scalar plant matches the closed form") {
  const auto model = fixtures::scalar_bilinear();
  for (double u : {-0.09, -0.05, 0.0, 0.03}) {
    const auto eq = find_equilibrium(model, model.theta_true(), vec1(u), vec1(1.0));
    CHECK(eq.x_s(0) == doctest::Approx(oracles::scalar_equilibrium(1.1, 0.1, u)).epsilon(1e-12));
    CHECK(eq.residual <= 1e-10);
  }
}

TEST_CASE("equilibrium with u_s = 0 and theta1 != 1 is the origin") {
  const auto model = fixtures::scalar_bilinear(0.5, 0.1);
  const auto eq = find_equilibrium(model, model.theta_true(), vec1(0.0), vec1(0.3));
  CHECK(std::abs(eq.x_s(0)) < 1e-12);
}

TEST_CASE("unit eigenvalue at the origin is reported") {
  const auto model = fixtures::scalar_bilinear(1.0, 0.1);
  try {
    find_equilibrium(model, model.theta_true(), vec1(0.0), vec1(0.5));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EigenvalueOneAtEquilibrium);
  }
  // The exact fixed point is still accepted when it is supplied as the guess.
  const auto eq = resolve_equilibrium(model, model.theta_true(), vec1(0.0), vec1(0.0));
  CHECK(eq.x_s(0) == 0.0);
}

TEST_CASE("scalar periodic orbit matches the product-form oracle") {
  const auto model = fixtures::scalar_bilinear();
  const auto u = scalar_inputs(-0.09, 0.3, 4);
  const auto traj = periodic_shoot(model, model.theta_true(), u, vec1(0.98901));
  CHECK(traj.x_r[0](0) == doctest::Approx(scalar_periodic_state(1.1, 0.1, u)).epsilon(1e-12));
  CHECK(traj.feasibility_residual <= 1e-12);
}

TEST_CASE("periodic shooting matches the closed form on random linear plants") {
  std::mt19937_64 rng(21);
  int checked = 0;
  while (checked < 40) {
    const int n = 1 + checked % 3, m = 1 + checked % 2, M = 2 + checked % 5;
    auto plant = fixtures::random_linear_plant(rng, n, m, 2);
    plant.A0 *= (checked % 2 == 0) ? 1.0 : 3.0;  // mix stable and unstable
    const MatrixXd A = plant.A();
    MatrixXd AM = MatrixXd::Identity(n, n);
    for (int i = 0; i < M; ++i) AM = A * AM;
    Eigen::JacobiSVD<MatrixXd> svd(MatrixXd::Identity(n, n) - AM);
    if (svd.singularValues().minCoeff() < 1e-3) continue;
    Sequence u;
    for (int k = 0; k < M; ++k) u.push_back(fixtures::random_vector(rng, m));
    const auto model = plant.model();
    const auto traj = periodic_shoot(model, plant.theta, u, VectorXd::Zero(n));
    const VectorXd x0 = oracles::linear_periodic_state(A, plant.B(), u);
    CHECK((traj.x_r[0] - x0).norm() <= 1e-8 * std::max(1.0, x0.norm()));
    // Rolling the orbit forward returns to its start.
    VectorXd x = traj.x_r[0];
    for (const auto& uk : u) x = step(model, x, uk, plant.theta);
    CHECK((x - traj.x_r[0]).norm() <= 1e-9 * std::max(1.0, x0.norm()));
    ++checked;
  }
}

TEST_CASE("shooting with a unit monodromy is singular") {
  // x+ = x + u: the monodromy is one for every input sequence.
  const auto model = fixtures::scalar_bilinear(1.0, 0.0);
  try {
    periodic_shoot(model, model.theta_true(), scalar_inputs(0.0, 0.3, 4), vec1(1.0));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PeriodicityJacobianSingular);
  }
}

TEST_CASE("sensitivity of the periodic state has rank n for controllable plants") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2, M = n + trial % 3;
    const auto plant = fixtures::random_linear_plant(rng, n, m, 1);
    const MatrixXd A = plant.A(), B = plant.B();
    MatrixXd ctrb(n, n * m);
    MatrixXd AkB = B;
    for (int k = 0; k < n; ++k) {
      ctrb.middleCols(k * m, m) = AkB;
      AkB = A * AkB;
    }
    Eigen::JacobiSVD<MatrixXd> svd(ctrb);
    if (svd.singularValues().minCoeff() < 1e-3) continue;
    Sequence u;
    for (int k = 0; k < M; ++k) u.push_back(fixtures::random_vector(rng, m));
    const auto model = plant.model();
    ReferenceTrajectory traj;
    try {
      traj = periodic_shoot(model, plant.theta, u, VectorXd::Zero(n));
    } catch (const Error&) {
      continue;  // |lambda(A^M)| too close to one for this draw
    }
    const MatrixXd sens = periodic_sensitivity(model, plant.theta, traj);
    CHECK(sens.rows() == n);
    CHECK(numerical_rank(sens, static_cast<double>(std::max(sens.rows(), sens.cols()))) == n);
    // Cross-check against finite differences of the shooting solution.
    const VectorXd uflat = stack(u);
    const MatrixXd fd = oracles::fd_jacobian(
        [&](const VectorXd& uu) {
          return periodic_shoot(model, plant.theta, unstack(uu, m, M), traj.x_r[0]).x_r[0];
        },
        uflat, 1e-6);
    CHECK((fd - sens).norm() <= 1e-5 * std::max(1.0, sens.norm()));
  }
}

TEST_CASE("output reachability of the scalar plant") {
  const auto model = fixtures::scalar_bilinear();
  const auto lin = linearize(model, vec1(1.0), vec1(-0.09), model.theta_true());
  const auto rep = output_reachability(lin);
  REQUIRE(rep.rows.size() == 1);
  const auto& row = rep.rows[0];
  CHECK(row.rank == 2);
  CHECK(row.output_reachable);
  CHECK(row.saturation_index == 1);
  CHECK(rep.any_reachable);
  CHECK(rep.witness == 0);
  // [D_1, C_1 B] with B = 1 + t2 x.
  CHECK(row.matrix(0, 0) == 0.0);
  CHECK(row.matrix(1, 0) == 1.0);
  CHECK(row.matrix(0, 1) == doctest::Approx(1.1));
  CHECK(row.matrix(1, 1) == doctest::Approx(-0.09 * 1.1));
}

TEST_CASE("output reachability fails at the origin and for a zero system") {
  const auto model = fixtures::scalar_bilinear(1.0, 0.1);
  const auto rep = output_reachability(linearize(model, vec1(0.0), vec1(0.0), model.theta_true()));
  CHECK(rep.rows[0].rank == 1);
  CHECK_FALSE(rep.any_reachable);

  Linearization zero;
  zero.A = MatrixXd::Zero(1, 1);
  zero.B = MatrixXd::Zero(1, 1);
  zero.C = {MatrixXd::Zero(2, 1)};
  zero.D = {MatrixXd::Zero(2, 1)};
  const auto z = output_reachability(zero);
  CHECK(z.rows[0].rank == 0);
  CHECK_FALSE(z.rows[0].output_reachable);
}

TEST_CASE("input excitation of the four-step sinusoid") {
  const auto u = scalar_inputs(-0.09, 0.3, 4);
  const auto res = pe_input_check(u, vec1(-0.09), 3);
  // Windows of three samples of 0.3 sin(pi k / 2): {0,1,0} and {1,0,1}.
  CHECK(res.alpha_u == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(res.beta_u == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(res.alpha_u >= std::pow(0.3 * std::sin(2.0 * std::numbers::pi / 4), 2) - 1e-15);
  CHECK(res.beta_u <= std::pow(0.3 * 3, 2));
  CHECK(res.pass);
  CHECK_THROWS_AS(pe_input_check(u, vec1(-0.09), 0), Error);
}

TEST_CASE("certificate windows match brute force and detect rank deficiency") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int S = 1 + trial % 4, n = 1 + trial % 2, M = 2 + trial % 5;
    std::vector<MatrixXd> phis;
    for (int k = 0; k < M; ++k) phis.push_back(fixtures::random_matrix(rng, S, n));
    const auto cert = window_certificate(phis, M);
    CHECK(cert.alpha == doctest::Approx(oracles::brute_force_window_min(phis)).epsilon(1e-10));
    for (const auto& w : cert.per_window) CHECK(w.min >= cert.alpha);
    if (cert.alpha > 0.0) {
      for (const auto& w : cert.per_window) CHECK(w.min > 0.0);
    }
  }
  MatrixXd phi(2, 1);
  phi << 1.0, 2.0;
  const auto same = window_certificate({phi, phi, phi, phi}, 4);
  CHECK(std::abs(same.alpha) < 1e-12);
  CHECK_FALSE(same.pass);
}

TEST_CASE("equilibrium-only trajectory at the origin is not exciting") {
  const auto model = fixtures::scalar_bilinear(1.0, 0.1);
  auto traj = fixtures::make_reference(Sequence(4, vec1(0.0)), Sequence(4, vec1(0.0)));
  const auto cert = certify_pe(model, model.theta_true(), traj);
  CHECK(cert.alpha == 0.0);
  CHECK_FALSE(cert.pass);
  REQUIRE(traj.pe.has_value());
}

TEST_CASE("generated reference for the scalar plant is certified") {
  const auto model = fixtures::scalar_bilinear();
  const auto eq = find_equilibrium(model, model.theta_true(), vec1(-0.09), vec1(1.0));
  const auto gen = generate_pe_reference(model, model.theta_true(), eq, 4, 0.3, InputShape::Sinusoid);
  CHECK(gen.window == 3);
  REQUIRE(gen.trajectory.pe.has_value());
  CHECK(gen.trajectory.pe->pass);
  CHECK(gen.trajectory.M == 4);
  CHECK(gen.trajectory.x_r[0](0) ==
        doctest::Approx(scalar_periodic_state(1.1, 0.1, scalar_inputs(-0.09, 0.3, 4))).epsilon(1e-12));
  // Periodic indexing beyond one period.
  CHECK(gen.trajectory.x_at(5)(0) == gen.trajectory.x_r[1](0));
  CHECK(gen.trajectory.u_at(8)(0) == gen.trajectory.u_r[0](0));
}

TEST_CASE("generation at the origin fails at the reachability stage") {
  const auto model = fixtures::scalar_bilinear(1.0, 0.1);
  const Equilibrium eq{vec1(0.0), vec1(0.0), 0.0};
  try {
    generate_pe_reference(model, model.theta_true(), eq, 4, 0.3, InputShape::Sinusoid);
    FAIL("expected an exception");
  } catch (const GenerationError& e) {
    CHECK(e.stage() == "output_reachability");
  }
}

TEST_CASE("PRBS perturbation is deterministic and two-valued") {
  const auto a = input_perturbation(8, 2, 0.4, InputShape::Prbs);
  const auto b = input_perturbation(8, 2, 0.4, InputShape::Prbs);
  REQUIRE(a.size() == 8);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k] == b[k]);
    for (int c = 0; c < 2; ++c) CHECK(std::abs(a[k](c)) == doctest::Approx(0.4));
  }
}

TEST_CASE("small PE perturbations of the scalar reference give PE trajectories") {
  const auto model = fixtures::scalar_bilinear();
  const auto eq = find_equilibrium(model, model.theta_true(), vec1(-0.09), vec1(1.0));
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(-0.2, 0.2);
  int certified = 0, exciting_inputs = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Sequence u;
    for (int k = 0; k < 4; ++k) u.push_back(eq.u_s + vec1(d(rng)));
    if (!pe_input_check(u, eq.u_s, 3).pass) continue;
    ++exciting_inputs;
    auto traj = periodic_shoot(model, model.theta_true(), u, eq.x_s);
    if (certify_pe(model, model.theta_true(), traj).pass) ++certified;
  }
  CHECK(exciting_inputs > 90);
  CHECK(certified == exciting_inputs);
}

TEST_CASE("constrained optimization meets the eigenvalue bounds") {
  const auto model = fixtures::scalar_bilinear(1.0, 0.1);
  PeOptimizeOptions opts;
  opts.alpha = 0.1;
  opts.beta = 0.3;
  opts.Q = MatrixXd::Constant(1, 1, 6.0);
  opts.R = MatrixXd::Constant(1, 1, 0.1);
  opts.M = 2;
  auto res = optimize_pe_reference(model, model.theta_true(), opts);
  CHECK(res.trajectory.feasibility_residual <= 1e-6);
  // Independent re-certification.
  auto traj = res.trajectory;
  const auto cert = certify_pe(model, model.theta_true(), traj);
  CHECK(cert.alpha >= 0.1 - 1e-6);
  CHECK(cert.beta <= 0.3 + 1e-6);
  VectorXd x = traj.x_r[0];
  for (const auto& u : traj.u_r) x = step(model, x, u, model.theta_true());
  CHECK((x - traj.x_r[0]).norm() <= 1e-6);
}

TEST_CASE("optimization without the excitation constraint collapses to the origin") {
  const auto model = fixtures::scalar_bilinear(1.0, 0.1);
  PeOptimizeOptions opts;
  opts.alpha = 0.0;
  opts.beta = 1e6;
  opts.Q = MatrixXd::Constant(1, 1, 6.0);
  opts.R = MatrixXd::Constant(1, 1, 0.1);
  opts.M = 2;
  const auto res = optimize_pe_reference(model, model.theta_true(), opts);
  CHECK(res.objective < 1e-10);
  CHECK(res.trajectory.x_r[0].norm() < 1e-5);
}
