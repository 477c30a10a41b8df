#pragma once

#include "ampc/loop.hpp"
#include "ampc/refgen.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ampc {

using Json = nlohmann::json;

enum class ReferenceMode { Generate, Optimize, Load };

struct ReferenceSpec {
  ReferenceMode mode = ReferenceMode::Generate;
  // generate
  VectorXd u_s;
  VectorXd x_guess;
  int M = 4;
  double amplitude = 0.3;
  InputShape shape = InputShape::Sinusoid;
  // optimize
  double alpha = 0.1;
  double beta = 0.3;
  MatrixXd Q;
  MatrixXd R;
  VectorXd x_init;
  Sequence u_init;
  // load
  std::string path;
  // parameter used to build the reference; absent means model.theta_true
  std::optional<VectorXd> theta;
};

struct SimSpec {
  VectorXd x0;  // empty: start on x_r(0)
  int K_total = 300;
  std::uint64_t seed = 0;
  std::optional<double> pe_threshold;
  int steady_window = 100;
  bool allow_uncertified = false;
};

struct OutputSpec {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
};

/// Parsed and validated experiment file.
struct ConfigFile {
  ParametricModel model;
  ReferenceSpec reference;
  MpcConfig mpc;
  RlsConfig rls;
  SimSpec sim;
  OutputSpec output;
  std::filesystem::path base_dir;  // resolves relative reference paths
};

/// Validates the document against the schema (unknown keys are rejected)
/// and builds the typed configuration.
ConfigFile parse_config(const Json& doc, const std::filesystem::path& base_dir = {});

/// Canonical serialization: every field written explicitly.
Json to_json(const ConfigFile& cfg);

Json load_config_document(const std::filesystem::path& path);
ConfigFile load_config(const std::filesystem::path& path);

/// Sets the value at a dotted path (e.g. "model.w_bar" or "rls.theta_hat_0").
void apply_override(Json& doc, const std::string& path, const Json& value);

using OverrideSet = std::vector<std::pair<std::string, Json>>;

Equilibrium resolve_equilibrium(const ParametricModel& model, const VectorXd& theta,
                                const VectorXd& u_s, const VectorXd& x_guess);

struct ResolvedReference {
  ReferenceTrajectory trajectory;
  std::optional<Equilibrium> equilibrium;
  std::optional<GenerationReport> generation;
  std::optional<PeOptimizeResult> optimization;
};

ResolvedReference resolve_reference(const ConfigFile& cfg);

ExperimentConfig make_experiment(const ConfigFile& cfg, ReferenceTrajectory reference);

/// One run per override set (the base document alone when the list is
/// empty). Failures are recorded per run; the sweep continues.
std::vector<RunSummary> sweep(const Json& base, const std::vector<OverrideSet>& variants,
                              Execution exec = Execution::Parallel,
                              const std::filesystem::path& base_dir = {});

/// Reference trajectory file written by `refgen` and read by mode "load".
Json reference_to_json(const ReferenceTrajectory& traj);
ReferenceTrajectory reference_from_json(const Json& doc);

Json to_json(const PeCertificate& cert);
Json to_json(const ReachabilityReport& report);

}  // namespace ampc
