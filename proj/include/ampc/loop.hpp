#pragma once

#include "ampc/model.hpp"
#include "ampc/mpc.hpp"
#include "ampc/refgen.hpp"
#include "ampc/rls.hpp"

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ampc {

struct RlsConfig {
  double lambda = 0.9;
  MatrixXd T;
  MatrixXd P_init;
  VectorXd theta_hat_0;
};

/// Fully resolved closed-loop experiment: the reference is already built.
struct ExperimentConfig {
  ParametricModel model;
  ReferenceTrajectory reference;
  MpcConfig mpc;
  RlsConfig rls;
  VectorXd x0;                 // empty: x_r(0)
  int K_total = 300;
  std::uint64_t seed = 0;
  std::optional<double> pe_threshold;  // absent: 0.5 * certified alpha
  int steady_window = 100;
  bool fixed_theta = false;    // ablation: never update the estimate
  bool allow_uncertified = false;
};

/// Identifier of the disturbance generator, written into every trace.
inline constexpr const char* kNoiseGenerator = "mt19937_64/uniform53";

/// Uniform disturbance on [-w_bar, w_bar]^n. Draws use the top 53 bits of
/// std::mt19937_64, whose output sequence is fixed by the C++ standard, so
/// streams are reproducible across standard libraries.
class UniformNoise {
 public:
  explicit UniformNoise(std::uint64_t seed) : engine_(seed) {}
  VectorXd draw(int n, double w_bar);

 private:
  std::mt19937_64 engine_;
};

/// Sliding window of the last M regressors with running sum of phi phi^T.
class PeMonitor {
 public:
  PeMonitor(int window, int S, double threshold);

  struct Reading {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool full = false;
    bool is_pe_now = false;
  };

  Reading update(const MatrixXd& phi);

  const MatrixXd& window_sum() const { return sum_; }
  MatrixXd recompute_sum() const;
  double threshold() const { return threshold_; }
  /// First step index after which every window met the threshold, provided
  /// the latest window does.
  std::optional<long> k_pe() const;

 private:
  int window_;
  double threshold_;
  std::deque<MatrixXd> buffer_;
  MatrixXd sum_;
  long step_ = -1;
  long last_violation_ = -1;
  bool last_ok_ = false;
};

struct TraceRow {
  long k = 0;
  VectorXd x, u, x_r, u_r;
  double tracking_error = 0.0;
  VectorXd theta_hat;    // estimate available at step k
  VectorXd theta_ctrl;   // parameter used by the controller at step k
  double theta_err = 0.0;
  double value = 0.0;    // V_N
  int mpc_iterations = 0;
  double grad_norm = 0.0;
  double hessian_lambda_min = std::numeric_limits<double>::quiet_NaN();
  double innovation_norm = 0.0;
  double pe_lambda_min = std::numeric_limits<double>::quiet_NaN();
  double pe_lambda_max = std::numeric_limits<double>::quiet_NaN();
  VectorXd w;
};

struct SimTrace {
  int n = 0;
  int m = 0;
  int S = 0;
  std::uint64_t seed = 0;
  std::string generator = kNoiseGenerator;
  std::vector<TraceRow> rows;
  VectorXd theta_final;  // estimate after the last update
  std::optional<long> k_pe;
  double pe_threshold = 0.0;
  int skipped_updates = 0;
  bool aborted = false;
  std::string abort_reason;
};

struct RunSummary {
  std::uint64_t seed = 0;
  bool aborted = false;
  std::string abort_reason;
  double final_theta_err = 0.0;
  double steady_theta_err = 0.0;    // mean |theta~| over the steady window
  double mean_tracking_error = 0.0; // over the last M steps
  std::optional<long> k_pe;
  double worst_window_lambda_min = 0.0;
  double theta_err_log_slope = 0.0; // per step, fitted from k = M on
};

SimTrace run(const ExperimentConfig& config);

RunSummary summarize(const SimTrace& trace, const ExperimentConfig& config);

enum class Execution { Serial, Parallel };

/// Runs independent experiments and returns summaries in input order. The
/// parallel path distributes runs over OpenMP threads; results are identical
/// to the serial path.
std::vector<RunSummary> sweep(std::span<const ExperimentConfig> configs,
                              Execution exec = Execution::Parallel);

}  // namespace ampc
