#pragma once

#include "ampc/config.hpp"

#include <complex>
#include <ostream>
#include <string>
#include <vector>

namespace ampc {

std::vector<std::string> trace_columns(int n, int m, int S);

/// Comment line naming the disturbance generator and seed, then the header
/// row, then one row per step with 17 significant digits.
void write_trace_csv(std::ostream& os, const SimTrace& trace);

/// Columns k, x_r0.., u_r0..
void write_reference_csv(std::ostream& os, const ReferenceTrajectory& traj);

Json to_json(const RunSummary& summary);

/// Structural conditions for a periodic, exciting reference, evaluated at the
/// configured equilibrium.
struct CheckReport {
  std::optional<Equilibrium> equilibrium;
  std::string equilibrium_error;
  std::vector<std::complex<double>> eigenvalues;
  std::vector<int> unit_eigenvalues;  // indices with lambda_i(A) = 1
  int controllability_rank = 0;
  bool controllable = false;
  ReachabilityReport reachability;
  bool existence_hypotheses = false;   // controllable and no unit eigenvalue
  bool excitation_hypotheses = false;  // some row output reachable
};

CheckReport run_check(const ConfigFile& cfg);

Json to_json(const CheckReport& report);
void print_check(std::ostream& os, const CheckReport& report);

}  // namespace ampc
