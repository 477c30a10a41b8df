#include "ampc/commands.hpp"

#include "ampc/config.hpp"
#include "ampc/report.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace ampc::cli {
namespace {

bool debug_logging() {
  const char* level = std::getenv("AMPC_LOG");
  return level != nullptr && std::string(level) == "debug";
}

std::filesystem::path output_dir(const Options& opts, const ConfigFile& cfg) {
  std::filesystem::path dir = opts.out ? *opts.out : std::filesystem::path(cfg.output.directory);
  std::filesystem::create_directories(dir);
  return dir;
}

bool wants(const ConfigFile& cfg, const std::string& format) {
  return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) !=
         cfg.output.formats.end();
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream f(path);
  f << j.dump(2) << '\n';
}

Json vec(const VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Json load_document(const Options& opts) {
  Json doc = load_config_document(opts.config);
  if (opts.seed) apply_override(doc, "sim.seed", *opts.seed);
  return doc;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

int cmd_refgen(const Options& opts, std::ostream& out, std::ostream& err) {
  ConfigFile cfg = [&] { return parse_config(load_document(opts), opts.config.parent_path()); }();
  if (cfg.reference.mode == ReferenceMode::Load) {
    throw ConfigError("refgen: reference.mode must be 'generate' or 'optimize'");
  }
  ResolvedReference ref;
  try {
    ref = resolve_reference(cfg);
  } catch (const GenerationError& e) {
    out << "failed: stage " << e.stage() << " (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kExitAborted;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out << "failed: stage optimization (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kExitAborted;
  }

  const auto dir = output_dir(opts, cfg);
  Json doc = reference_to_json(ref.trajectory);
  if (ref.equilibrium) {
    doc["equilibrium"] = {{"x_s", vec(ref.equilibrium->x_s)},
                          {"u_s", vec(ref.equilibrium->u_s)},
                          {"residual", ref.equilibrium->residual}};
  }
  if (ref.generation) {
    doc["reachability"] = to_json(ref.generation->reachability);
    doc["input_pe"] = {{"window", ref.generation->window},
                       {"alpha_u", ref.generation->input_pe.alpha_u},
                       {"beta_u", ref.generation->input_pe.beta_u},
                       {"pass", ref.generation->input_pe.pass}};
  }
  if (ref.optimization) {
    doc["optimization"] = {{"objective", ref.optimization->objective},
                           {"periodicity_violation", ref.optimization->periodicity_violation},
                           {"eigen_violation", ref.optimization->eigen_violation},
                           {"rounds", ref.optimization->rounds}};
  }
  if (wants(cfg, "json")) write_json(dir / "reference.json", doc);
  if (wants(cfg, "csv")) {
    std::ofstream f(dir / "reference.csv");
    write_reference_csv(f, ref.trajectory);
  }

  const auto& traj = ref.trajectory;
  const bool certified = traj.pe && traj.pe->pass;
  if (opts.json) {
    out << doc.dump(2) << '\n';
  } else {
    out << (certified ? "certified" : "failed: stage certification") << ": M=" << traj.M
        << " x_r(0)=";
    for (Eigen::Index i = 0; i < traj.x_r[0].size(); ++i) out << (i ? "," : "") << traj.x_r[0](i);
    if (traj.pe) out << " alpha=" << traj.pe->alpha << " beta=" << traj.pe->beta;
    out << '\n';
  }
  if (debug_logging()) err << "reference written to " << dir << '\n';
  return certified ? kExitOk : kExitAborted;
}

int cmd_simulate(const Options& opts, std::ostream& out, std::ostream& err) {
  Json doc = load_document(opts);
  if (opts.no_noise) apply_override(doc, "model.w_bar", 0.0);
  const ConfigFile cfg = parse_config(doc, opts.config.parent_path());
  ResolvedReference ref;
  try {
    ref = resolve_reference(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out << "aborted: reference construction failed (" << to_string(e.code()) << "): " << e.what() << '\n';
    return kExitAborted;
  }
  ExperimentConfig exp = make_experiment(cfg, ref.trajectory);
  exp.fixed_theta = opts.fixed_theta;
  const SimTrace trace = run(exp);
  const RunSummary summary = summarize(trace, exp);

  const auto dir = output_dir(opts, cfg);
  if (wants(cfg, "csv")) {
    std::ofstream f(dir / "trace.csv");
    write_trace_csv(f, trace);
  }
  Json sj = to_json(summary);
  sj["generator"] = trace.generator;
  sj["steps"] = trace.rows.size();
  sj["pe_threshold"] = trace.pe_threshold;
  sj["skipped_updates"] = trace.skipped_updates;
  sj["theta_final"] = vec(trace.theta_final);
  sj["initial_theta_err"] = (cfg.model.theta_true() - cfg.rls.theta_hat_0).norm();
  sj["initial_state_err"] =
      exp.x0.size() ? (exp.x0 - ref.trajectory.x_at(0)).norm() : 0.0;
  if (wants(cfg, "json")) write_json(dir / "summary.json", sj);

  if (opts.json) {
    out << sj.dump(2) << '\n';
  } else {
    out << (trace.aborted ? "aborted" : "completed") << ": steps=" << trace.rows.size()
        << " final |theta_err|=" << summary.final_theta_err
        << " steady |theta_err|=" << summary.steady_theta_err
        << " k_PE=" << (summary.k_pe ? std::to_string(*summary.k_pe) : "none") << '\n';
  }
  if (trace.aborted) {
    err << "run aborted: " << trace.abort_reason << '\n';
    return kExitAborted;
  }
  return kExitOk;
}

int cmd_check(const Options& opts, std::ostream& out, std::ostream&) {
  const ConfigFile cfg = parse_config(load_document(opts), opts.config.parent_path());
  const auto rep = run_check(cfg);
  if (opts.json) {
    out << to_json(rep).dump(2) << '\n';
  } else {
    print_check(out, rep);
  }
  return kExitOk;
}

namespace {

std::string csv_quote(const std::string& field) {
  std::string q = "\"";
  for (char c : field) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

}  // namespace

int cmd_sweep(const Options& opts, std::ostream& out, std::ostream& err) {
  const Json base = load_document(opts);
  const ConfigFile cfg = parse_config(base, opts.config.parent_path());

  Json spec = Json::object();
  if (opts.sweep_spec) spec = load_config_document(*opts.sweep_spec);
  if (!spec.is_object()) throw ConfigError("sweep spec: expected an object");
  for (const auto& [key, _] : spec.items()) {
    if (key != "grid" && key != "seeds" && key != "base_seed") {
      throw ConfigError("sweep spec: unknown key '" + key + "'");
    }
  }
  const Json grid = spec.value("grid", Json::object());
  if (!grid.is_object()) throw ConfigError("sweep spec: grid must map paths to value lists");
  const int seeds = spec.value("seeds", 1);
  if (seeds < 1) throw ConfigError("sweep spec: seeds must be >= 1");
  const std::uint64_t base_seed = spec.value("base_seed", cfg.sim.seed);

  // Cartesian product of the grid, in key order.
  std::vector<OverrideSet> points{{}};
  for (const auto& [path, values] : grid.items()) {
    if (!values.is_array() || values.empty()) {
      throw ConfigError("sweep spec: grid entry '" + path + "' must be a non-empty list");
    }
    std::vector<OverrideSet> next;
    for (const auto& p : points) {
      for (const auto& v : values) {
        OverrideSet q = p;
        q.emplace_back(path, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  std::vector<OverrideSet> variants;
  std::vector<std::size_t> point_of;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (int s = 0; s < seeds; ++s) {
      OverrideSet v = points[p];
      v.emplace_back("sim.seed", base_seed + static_cast<std::uint64_t>(s));
      variants.push_back(std::move(v));
      point_of.push_back(p);
    }
  }

  const auto summaries = sweep(base, variants, opts.serial ? Execution::Serial : Execution::Parallel,
                               opts.config.parent_path());

  const auto dir = output_dir(opts, cfg);
  std::ofstream runs(dir / "sweep_runs.csv");
  runs << "run,point,seed";
  for (const auto& [path, _] : grid.items()) runs << ',' << path;
  runs << ",status,final_theta_err,steady_theta_err,mean_tracking_error,k_pe,"
          "worst_window_lambda_min,theta_err_log_slope\n";
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    runs << i << ',' << point_of[i] << ',' << variants[i].back().second.dump();
    for (const auto& ov : points[point_of[i]]) runs << ',' << csv_quote(ov.second.dump());
    runs << ',' << (s.aborted ? "aborted" : "ok") << ',' << s.final_theta_err << ','
         << s.steady_theta_err << ',' << s.mean_tracking_error << ','
         << (s.k_pe ? std::to_string(*s.k_pe) : "") << ',' << s.worst_window_lambda_min << ','
         << s.theta_err_log_slope << '\n';
    if (s.aborted && debug_logging()) err << "run " << i << " failed: " << s.abort_reason << '\n';
  }

  std::ofstream agg(dir / "sweep_summary.csv");
  const std::string header =
      "point,overrides,runs,failed,steady_theta_err_q25,steady_theta_err_median,"
      "steady_theta_err_q75,theta_err_log_slope_median\n";
  agg << header;
  if (!opts.json) out << header;
  Json jpoints = Json::array();
  int failures = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<double> steady, slope;
    int failed = 0;
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      if (point_of[i] != p) continue;
      if (summaries[i].aborted) {
        ++failed;
        continue;
      }
      steady.push_back(summaries[i].steady_theta_err);
      slope.push_back(summaries[i].theta_err_log_slope);
    }
    failures += failed;
    Json ov = Json::object();
    for (const auto& [path, value] : points[p]) ov[path] = value;
    std::ostringstream line;
    line << p << ',' << csv_quote(ov.dump()) << ',' << seeds << ',' << failed << ','
         << quantile(steady, 0.25) << ',' << median(steady) << ',' << quantile(steady, 0.75) << ','
         << median(slope) << '\n';
    agg << line.str();
    if (!opts.json) out << line.str();
    jpoints.push_back({{"overrides", ov},
                       {"runs", seeds},
                       {"failed", failed},
                       {"steady_theta_err_median", median(steady)},
                       {"theta_err_log_slope_median", median(slope)}});
  }
  if (opts.json) out << Json{{"points", jpoints}}.dump(2) << '\n';
  if (failures > 0) err << failures << " run(s) failed; see sweep_runs.csv\n";
  return kExitOk;
}

}  // namespace ampc::cli
