#pragma once

#include "ampc/error.hpp"
#include "ampc/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ampc {

struct Equilibrium {
  VectorXd x_s;
  VectorXd u_s;
  double residual = 0.0;
};

/// Excitation bounds of a period-M signal over all M cyclic windows.
struct PeCertificate {
  int M = 0;
  double alpha = 0.0;   // min over windows of lambda_min(sum phi phi^T)
  double beta = 0.0;    // max over windows of lambda_max(sum phi phi^T)
  std::vector<EigenBounds> per_window;
  bool pass = false;
};

struct ReferenceTrajectory {
  int M = 0;
  Sequence x_r;
  Sequence u_r;
  double feasibility_residual = 0.0;
  std::optional<PeCertificate> pe;

  /// Periodic extension: x_r(k) = x_r(k mod M).
  const VectorXd& x_at(long k) const { return x_r[static_cast<std::size_t>(wrap(k))]; }
  const VectorXd& u_at(long k) const { return u_r[static_cast<std::size_t>(wrap(k))]; }

 private:
  long wrap(long k) const {
    const long r = k % M;
    return r < 0 ? r + M : r;
  }
};

struct RowReachability {
  MatrixXd matrix;          // [D_i, C_i B, C_i A B, ..., C_i A^{n-1} B]
  int rank = 0;
  bool output_reachable = false;
  int saturation_index = 0; // first k at which the rank of [D_i .. C_i A^{k-1} B] saturates
};

struct ReachabilityReport {
  std::vector<RowReachability> rows;
  bool any_reachable = false;
  int witness = -1;
};

struct InputPeResult {
  double alpha_u = 0.0;
  double beta_u = 0.0;
  bool pass = false;
};

enum class InputShape { Sinusoid, Prbs };

struct NewtonOptions {
  int max_iter = 100;
  int max_halvings = 30;
  double tol = 1e-10;
};

/// Default relative PE threshold: pass iff alpha >= rel * max(1, beta).
inline constexpr double kPeRelativeThreshold = 1e-8;

bool pe_passes(double alpha, double beta, double rel = kPeRelativeThreshold);

/// Raised when a shooting or equilibrium iteration leaves the basin.
class ShootingDiverged : public Error {
 public:
  ShootingDiverged(const std::string& msg, std::vector<VectorXd> history)
      : Error(ErrorCode::ShootingDiverged, msg), history_(std::move(history)) {}
  const std::vector<VectorXd>& history() const { return history_; }

 private:
  std::vector<VectorXd> history_;
};

/// Reference generation failure tagged with the stage that rejected it.
class GenerationError : public Error {
 public:
  GenerationError(ErrorCode code, std::string stage, const std::string& msg,
                  std::optional<PeCertificate> cert = std::nullopt)
      : Error(code, msg), stage_(std::move(stage)), certificate_(std::move(cert)) {}
  const std::string& stage() const { return stage_; }
  const std::optional<PeCertificate>& certificate() const { return certificate_; }

 private:
  std::string stage_;
  std::optional<PeCertificate> certificate_;
};

Equilibrium find_equilibrium(const ParametricModel& model, const VectorXd& theta,
                             const VectorXd& u_s, const VectorXd& x_guess,
                             const NewtonOptions& opts = {});

/// Solves x0 = Phi_M(x0; u_r) by damped Newton and rolls out one period.
ReferenceTrajectory periodic_shoot(const ParametricModel& model, const VectorXd& theta,
                                   const Sequence& u_r, const VectorXd& x_guess,
                                   const NewtonOptions& opts = {.tol = 1e-12});

/// Jacobian d x_r(0) / d u_r of the periodic solution (n x M*m).
MatrixXd periodic_sensitivity(const ParametricModel& model, const VectorXd& theta,
                              const ReferenceTrajectory& traj);

ReachabilityReport output_reachability(const Linearization& lin);

InputPeResult pe_input_check(const Sequence& u_r, const VectorXd& u_s, int window);

PeCertificate certify_pe(const ParametricModel& model, const VectorXd& theta,
                         ReferenceTrajectory& traj, double rel_threshold = kPeRelativeThreshold);

/// Window eigen-bounds of an arbitrary periodic regressor sequence.
PeCertificate window_certificate(const std::vector<MatrixXd>& phis, int window,
                                 double rel_threshold = kPeRelativeThreshold);

Sequence input_perturbation(int M, int m, double amplitude, InputShape shape);

struct GenerationReport {
  ReferenceTrajectory trajectory;
  Linearization linearization;
  ReachabilityReport reachability;
  InputPeResult input_pe;
  int window = 0;
};

/// Equilibrium -> reachability -> spectrum -> input PE -> shooting ->
/// certification. Throws GenerationError naming the failing stage.
GenerationReport generate_pe_reference(const ParametricModel& model, const VectorXd& theta,
                                       const Equilibrium& eq, int M, double amplitude,
                                       InputShape shape);

struct PeOptimizeOptions {
  double alpha = 0.1;
  double beta = 0.3;
  MatrixXd Q;
  MatrixXd R;
  int M = 2;
  VectorXd x_init;            // empty: ones
  Sequence u_init;            // empty: alternating +-0.5
  double mu0 = 10.0;
  double mu_growth = 10.0;
  int rounds = 8;
  double violation_tol = 1e-6;
};

struct PeOptimizeResult {
  ReferenceTrajectory trajectory;
  double objective = 0.0;
  double periodicity_violation = 0.0;
  double eigen_violation = 0.0;
  int rounds = 0;
};

/// Minimizes (1/M) sum |x_i|_Q^2 + |u_i|_R^2 over periodic trajectories
/// subject to alpha I <= sum phi phi^T <= beta I via a quadratic penalty.
PeOptimizeResult optimize_pe_reference(const ParametricModel& model, const VectorXd& theta,
                                       const PeOptimizeOptions& opts);

}  // namespace ampc
