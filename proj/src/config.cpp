#include "ampc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ampc {
namespace {

using KeySet = std::set<std::string>;

void check_object(const Json& j, const std::string& where, const KeySet& allowed,
                  const KeySet& required = {}) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
  for (const auto& key : required) {
    if (!j.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
  }
}

double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

int get_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<int>();
}

VectorXd get_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = get_number(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

MatrixXd get_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a row-major list of rows");
  const auto rows = j.size();
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(where + ": rows must be non-empty arrays");
  MatrixXd mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(where + ": ragged matrix");
    mat.row(static_cast<Eigen::Index>(r)) =
        get_vector(j[r], where + "[" + std::to_string(r) + "]").transpose();
  }
  return mat;
}

MatrixXd get_spd(const Json& j, const std::string& where, Eigen::Index dim) {
  MatrixXd mat = get_matrix(j, where);
  if (mat.rows() != dim || mat.cols() != dim) {
    throw ConfigError(where + ": expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                      " matrix");
  }
  if (!is_positive_definite(mat)) throw ConfigError(where + ": must be symmetric positive definite");
  return mat;
}

std::vector<int> get_powers(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of integers");
  std::vector<int> p;
  for (std::size_t i = 0; i < j.size(); ++i) p.push_back(get_int(j[i], where));
  return p;
}

PolynomialMap get_map(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected one monomial list per state row");
  PolynomialMap map;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto rw = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) throw ConfigError(rw + ": expected a list of monomials");
    std::vector<Monomial> row;
    for (std::size_t t = 0; t < j[r].size(); ++t) {
      const auto tw = rw + "[" + std::to_string(t) + "]";
      const auto& mj = j[r][t];
      check_object(mj, tw, {"coeff", "x_powers", "u_powers"}, {"coeff", "x_powers", "u_powers"});
      row.push_back({get_number(mj["coeff"], tw + ".coeff"),
                     get_powers(mj["x_powers"], tw + ".x_powers"),
                     get_powers(mj["u_powers"], tw + ".u_powers")});
    }
    map.rows.push_back(std::move(row));
  }
  return map;
}

Json vec_json(const VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Json mat_json(const MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vec_json(m.row(r).transpose()));
  return j;
}

Json seq_json(const Sequence& s) {
  Json j = Json::array();
  for (const auto& v : s) j.push_back(vec_json(v));
  return j;
}

Sequence get_sequence(const Json& j, const std::string& where, Eigen::Index dim) {
  if (!j.is_array()) throw ConfigError(where + ": expected a list of vectors");
  Sequence s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    s.push_back(get_vector(j[i], where + "[" + std::to_string(i) + "]"));
    if (s.back().size() != dim) throw ConfigError(where + ": vector dimension mismatch");
  }
  return s;
}

Json map_json(const PolynomialMap& map) {
  Json rows = Json::array();
  for (const auto& row : map.rows) {
    Json terms = Json::array();
    for (const auto& mono : row) {
      terms.push_back({{"coeff", mono.coeff}, {"x_powers", mono.x_powers}, {"u_powers", mono.u_powers}});
    }
    rows.push_back(std::move(terms));
  }
  return rows;
}

ParametricModel parse_model(const Json& j) {
  check_object(j, "model", {"n", "m", "f0", "basis", "theta_true", "w_bar"},
               {"n", "m", "f0", "basis", "theta_true"});
  const int n = get_int(j["n"], "model.n");
  const int m = get_int(j["m"], "model.m");
  if (!j["basis"].is_array()) throw ConfigError("model.basis: expected a list of maps");
  std::vector<PolynomialMap> basis;
  for (std::size_t b = 0; b < j["basis"].size(); ++b) {
    basis.push_back(get_map(j["basis"][b], "model.basis[" + std::to_string(b) + "]"));
  }
  const double w_bar = j.contains("w_bar") ? get_number(j["w_bar"], "model.w_bar") : 0.0;
  return ParametricModel(n, m, get_map(j["f0"], "model.f0"), std::move(basis),
                         get_vector(j["theta_true"], "model.theta_true"), w_bar);
}

ReferenceSpec parse_reference(const Json& j, const ParametricModel& model) {
  if (!j.is_object() || !j.contains("mode") || !j["mode"].is_string()) {
    throw ConfigError("reference: missing string key 'mode'");
  }
  ReferenceSpec spec;
  const auto mode = j["mode"].get<std::string>();
  const auto n = model.n();
  const auto m = model.m();
  auto theta_of = [&](const Json& jj) {
    if (jj.contains("theta")) {
      spec.theta = get_vector(jj["theta"], "reference.theta");
      if (spec.theta->size() != model.S()) throw ConfigError("reference.theta: expected length S");
    }
  };
  if (mode == "generate") {
    spec.mode = ReferenceMode::Generate;
    check_object(j, "reference", {"mode", "u_s", "x_guess", "M", "amplitude", "shape", "theta"},
                 {"u_s", "x_guess", "M", "amplitude"});
    spec.u_s = get_vector(j["u_s"], "reference.u_s");
    spec.x_guess = get_vector(j["x_guess"], "reference.x_guess");
    if (spec.u_s.size() != m || spec.x_guess.size() != n) {
      throw ConfigError("reference: u_s must have length m and x_guess length n");
    }
    spec.M = get_int(j["M"], "reference.M");
    spec.amplitude = get_number(j["amplitude"], "reference.amplitude");
    const std::string shape = j.value("shape", "sinusoid");
    if (shape == "sinusoid") {
      spec.shape = InputShape::Sinusoid;
    } else if (shape == "prbs") {
      spec.shape = InputShape::Prbs;
    } else {
      throw ConfigError("reference.shape: expected 'sinusoid' or 'prbs'");
    }
    if (spec.M < n) throw ConfigError("reference.M must be >= n");
  } else if (mode == "optimize") {
    spec.mode = ReferenceMode::Optimize;
    check_object(j, "reference", {"mode", "M", "alpha", "beta", "Q", "R", "x_init", "u_init", "theta"},
                 {"M", "alpha", "beta", "Q", "R"});
    spec.M = get_int(j["M"], "reference.M");
    if (spec.M < 1) throw ConfigError("reference.M must be >= 1");
    spec.alpha = get_number(j["alpha"], "reference.alpha");
    spec.beta = get_number(j["beta"], "reference.beta");
    if (spec.alpha < 0.0 || spec.beta < spec.alpha) {
      throw ConfigError("reference: need 0 <= alpha <= beta");
    }
    spec.Q = get_spd(j["Q"], "reference.Q", n);
    spec.R = get_spd(j["R"], "reference.R", m);
    if (j.contains("x_init")) {
      spec.x_init = get_vector(j["x_init"], "reference.x_init");
      if (spec.x_init.size() != n) throw ConfigError("reference.x_init: expected length n");
    }
    if (j.contains("u_init")) {
      spec.u_init = get_sequence(j["u_init"], "reference.u_init", m);
      if (static_cast<int>(spec.u_init.size()) != spec.M) {
        throw ConfigError("reference.u_init: expected M vectors");
      }
    }
  } else if (mode == "load") {
    spec.mode = ReferenceMode::Load;
    check_object(j, "reference", {"mode", "path", "theta"}, {"path"});
    if (!j["path"].is_string()) throw ConfigError("reference.path: expected a string");
    spec.path = j["path"].get<std::string>();
  } else {
    throw ConfigError("reference.mode: expected 'generate', 'optimize' or 'load'");
  }
  theta_of(j);
  return spec;
}

MpcConfig parse_mpc(const Json& j, const ParametricModel& model) {
  check_object(j, "mpc", {"Q", "R", "N", "gn_tol", "max_iter", "lm_damping", "hessian_check"},
               {"Q", "R", "N"});
  MpcConfig cfg;
  cfg.Q = get_spd(j["Q"], "mpc.Q", model.n());
  cfg.R = get_spd(j["R"], "mpc.R", model.m());
  cfg.N = get_int(j["N"], "mpc.N");
  if (j.contains("gn_tol")) cfg.gn_tol = get_number(j["gn_tol"], "mpc.gn_tol");
  if (j.contains("max_iter")) cfg.max_iter = get_int(j["max_iter"], "mpc.max_iter");
  if (j.contains("lm_damping")) cfg.lm_damping = get_number(j["lm_damping"], "mpc.lm_damping");
  const std::string mode = j.value("hessian_check", "strict");
  if (mode == "strict") {
    cfg.hessian_check = HessianCheckMode::Strict;
  } else if (mode == "fast") {
    cfg.hessian_check = HessianCheckMode::Fast;
  } else if (mode == "off") {
    cfg.hessian_check = HessianCheckMode::Off;
  } else {
    throw ConfigError("mpc.hessian_check: expected 'strict', 'fast' or 'off'");
  }
  cfg.validate(model.n(), model.m());
  return cfg;
}

RlsConfig parse_rls(const Json& j, const ParametricModel& model) {
  check_object(j, "rls", {"lambda", "T", "P_init", "theta_hat_0"}, {"lambda", "T", "theta_hat_0"});
  RlsConfig cfg;
  cfg.lambda = get_number(j["lambda"], "rls.lambda");
  if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0)) throw ConfigError("rls.lambda must lie in (0, 1)");
  cfg.T = get_spd(j["T"], "rls.T", model.n());
  cfg.P_init = j.contains("P_init") ? get_spd(j["P_init"], "rls.P_init", model.S())
                                    : MatrixXd(10.0 * MatrixXd::Identity(model.S(), model.S()));
  cfg.theta_hat_0 = get_vector(j["theta_hat_0"], "rls.theta_hat_0");
  if (cfg.theta_hat_0.size() != model.S()) throw ConfigError("rls.theta_hat_0: expected length S");
  return cfg;
}

SimSpec parse_sim(const Json& j, const ParametricModel& model) {
  check_object(j, "sim", {"x0", "K_total", "seed", "pe_threshold", "steady_window", "allow_uncertified"});
  SimSpec s;
  if (j.contains("x0")) {
    s.x0 = get_vector(j["x0"], "sim.x0");
    if (s.x0.size() != model.n()) throw ConfigError("sim.x0: expected length n");
  }
  if (j.contains("K_total")) s.K_total = get_int(j["K_total"], "sim.K_total");
  if (s.K_total < 1) throw ConfigError("sim.K_total must be >= 1");
  if (j.contains("seed")) {
    const bool ok = j["seed"].is_number_unsigned() ||
                    (j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError("sim.seed: expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("pe_threshold")) {
    s.pe_threshold = get_number(j["pe_threshold"], "sim.pe_threshold");
    if (!(*s.pe_threshold > 0.0)) throw ConfigError("sim.pe_threshold must be > 0");
  }
  if (j.contains("steady_window")) s.steady_window = get_int(j["steady_window"], "sim.steady_window");
  if (s.steady_window < 1) throw ConfigError("sim.steady_window must be >= 1");
  if (j.contains("allow_uncertified")) {
    if (!j["allow_uncertified"].is_boolean()) throw ConfigError("sim.allow_uncertified: expected bool");
    s.allow_uncertified = j["allow_uncertified"].get<bool>();
  }
  return s;
}

OutputSpec parse_output(const Json& j) {
  check_object(j, "output", {"directory", "formats"});
  OutputSpec o;
  if (j.contains("directory")) {
    if (!j["directory"].is_string()) throw ConfigError("output.directory: expected a string");
    o.directory = j["directory"].get<std::string>();
  }
  if (j.contains("formats")) {
    o.formats.clear();
    for (const auto& f : j["formats"]) {
      if (!f.is_string() || (f != "csv" && f != "json")) {
        throw ConfigError("output.formats: entries must be 'csv' or 'json'");
      }
      o.formats.push_back(f.get<std::string>());
    }
  }
  return o;
}

std::string_view mode_name(ReferenceMode mode) {
  switch (mode) {
    case ReferenceMode::Generate: return "generate";
    case ReferenceMode::Optimize: return "optimize";
    case ReferenceMode::Load: return "load";
  }
  return "generate";
}

std::string_view hessian_mode_name(HessianCheckMode mode) {
  switch (mode) {
    case HessianCheckMode::Strict: return "strict";
    case HessianCheckMode::Fast: return "fast";
    case HessianCheckMode::Off: return "off";
  }
  return "strict";
}

}  // namespace

ConfigFile parse_config(const Json& doc, const std::filesystem::path& base_dir) {
  check_object(doc, "config", {"model", "reference", "mpc", "rls", "sim", "output"},
               {"model", "reference", "mpc", "rls"});
  ParametricModel model = parse_model(doc["model"]);
  ConfigFile cfg{model,
                 parse_reference(doc["reference"], model),
                 parse_mpc(doc["mpc"], model),
                 parse_rls(doc["rls"], model),
                 doc.contains("sim") ? parse_sim(doc["sim"], model) : SimSpec{},
                 doc.contains("output") ? parse_output(doc["output"]) : OutputSpec{},
                 base_dir};
  return cfg;
}

Json to_json(const ConfigFile& cfg) {
  const auto& model = cfg.model;
  Json basis = Json::array();
  for (const auto& b : model.basis()) basis.push_back(map_json(b));
  Json doc;
  doc["model"] = {{"n", model.n()},
                  {"m", model.m()},
                  {"f0", map_json(model.f0())},
                  {"basis", basis},
                  {"theta_true", vec_json(model.theta_true())},
                  {"w_bar", model.w_bar()}};

  const auto& r = cfg.reference;
  Json ref{{"mode", mode_name(r.mode)}};
  switch (r.mode) {
    case ReferenceMode::Generate:
      ref["u_s"] = vec_json(r.u_s);
      ref["x_guess"] = vec_json(r.x_guess);
      ref["M"] = r.M;
      ref["amplitude"] = r.amplitude;
      ref["shape"] = r.shape == InputShape::Sinusoid ? "sinusoid" : "prbs";
      break;
    case ReferenceMode::Optimize:
      ref["M"] = r.M;
      ref["alpha"] = r.alpha;
      ref["beta"] = r.beta;
      ref["Q"] = mat_json(r.Q);
      ref["R"] = mat_json(r.R);
      if (r.x_init.size() > 0) ref["x_init"] = vec_json(r.x_init);
      if (!r.u_init.empty()) ref["u_init"] = seq_json(r.u_init);
      break;
    case ReferenceMode::Load:
      ref["path"] = r.path;
      break;
  }
  if (r.theta) ref["theta"] = vec_json(*r.theta);
  doc["reference"] = ref;

  doc["mpc"] = {{"Q", mat_json(cfg.mpc.Q)},
                {"R", mat_json(cfg.mpc.R)},
                {"N", cfg.mpc.N},
                {"gn_tol", cfg.mpc.gn_tol},
                {"max_iter", cfg.mpc.max_iter},
                {"lm_damping", cfg.mpc.lm_damping},
                {"hessian_check", hessian_mode_name(cfg.mpc.hessian_check)}};
  doc["rls"] = {{"lambda", cfg.rls.lambda},
                {"T", mat_json(cfg.rls.T)},
                {"P_init", mat_json(cfg.rls.P_init)},
                {"theta_hat_0", vec_json(cfg.rls.theta_hat_0)}};
  Json sim{{"K_total", cfg.sim.K_total},
           {"seed", cfg.sim.seed},
           {"steady_window", cfg.sim.steady_window},
           {"allow_uncertified", cfg.sim.allow_uncertified}};
  if (cfg.sim.x0.size() > 0) sim["x0"] = vec_json(cfg.sim.x0);
  if (cfg.sim.pe_threshold) sim["pe_threshold"] = *cfg.sim.pe_threshold;
  doc["sim"] = sim;
  doc["output"] = {{"directory", cfg.output.directory}, {"formats", cfg.output.formats}};
  return doc;
}

Json load_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  try {
    return Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
}

ConfigFile load_config(const std::filesystem::path& path) {
  return parse_config(load_config_document(path), path.parent_path());
}

void apply_override(Json& doc, const std::string& path, const Json& value) {
  Json* node = &doc;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  if (keys.empty()) throw ConfigError("override: empty path");
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object() || !node->contains(keys[i])) {
      throw ConfigError("override: no section '" + keys[i] + "' in path '" + path + "'");
    }
    node = &(*node)[keys[i]];
  }
  if (!node->is_object()) throw ConfigError("override: '" + path + "' does not name an object key");
  (*node)[keys.back()] = value;
}

Equilibrium resolve_equilibrium(const ParametricModel& model, const VectorXd& theta,
                                const VectorXd& u_s, const VectorXd& x_guess) {
  try {
    return find_equilibrium(model, theta, u_s, x_guess);
  } catch (const Error& e) {
    // A guess that is already a fixed point is accepted even when the
    // Newton Jacobian is singular there (e.g. the origin with A = 1).
    const double res = (step(model, x_guess, u_s, theta) - x_guess).norm();
    if (e.code() == ErrorCode::EigenvalueOneAtEquilibrium && res <= 1e-10) {
      return {x_guess, u_s, res};
    }
    throw;
  }
}

ResolvedReference resolve_reference(const ConfigFile& cfg) {
  const auto& spec = cfg.reference;
  const VectorXd theta = spec.theta.value_or(cfg.model.theta_true());
  ResolvedReference out;
  switch (spec.mode) {
    case ReferenceMode::Generate: {
      Equilibrium eq;
      try {
        eq = resolve_equilibrium(cfg.model, theta, spec.u_s, spec.x_guess);
      } catch (const Error& e) {
        throw GenerationError(e.code(), "equilibrium", e.what());
      }
      out.equilibrium = eq;
      auto gen = generate_pe_reference(cfg.model, theta, eq, spec.M, spec.amplitude, spec.shape);
      out.trajectory = gen.trajectory;
      out.generation = std::move(gen);
      break;
    }
    case ReferenceMode::Optimize: {
      PeOptimizeOptions opts;
      opts.alpha = spec.alpha;
      opts.beta = spec.beta;
      opts.Q = spec.Q;
      opts.R = spec.R;
      opts.M = spec.M;
      opts.x_init = spec.x_init;
      opts.u_init = spec.u_init;
      auto res = optimize_pe_reference(cfg.model, theta, opts);
      out.trajectory = res.trajectory;
      out.optimization = std::move(res);
      break;
    }
    case ReferenceMode::Load: {
      std::filesystem::path p = spec.path;
      if (p.is_relative()) p = cfg.base_dir / p;
      std::ifstream in(p);
      if (!in) throw ConfigError("cannot open reference file '" + p.string() + "'");
      Json doc;
      try {
        doc = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw ConfigError("reference file '" + p.string() + "': " + e.what());
      }
      out.trajectory = reference_from_json(doc);
      for (int k = 0; k < out.trajectory.M; ++k) {
        check_dimensions(cfg.model, out.trajectory.x_r[k], out.trajectory.u_r[k]);
      }
      double res = 0.0;
      for (int k = 0; k < out.trajectory.M; ++k) {
        const VectorXd next = step(cfg.model, out.trajectory.x_r[k], out.trajectory.u_r[k], theta);
        res = std::max(res, (next - out.trajectory.x_at(k + 1)).norm());
      }
      out.trajectory.feasibility_residual = res;
      if (res > 1e-6) {
        throw ConfigError("reference file '" + p.string() + "' is not a feasible period-M sequence");
      }
      certify_pe(cfg.model, theta, out.trajectory);
      break;
    }
  }
  return out;
}

ExperimentConfig make_experiment(const ConfigFile& cfg, ReferenceTrajectory reference) {
  return ExperimentConfig{.model = cfg.model,
                          .reference = std::move(reference),
                          .mpc = cfg.mpc,
                          .rls = cfg.rls,
                          .x0 = cfg.sim.x0,
                          .K_total = cfg.sim.K_total,
                          .seed = cfg.sim.seed,
                          .pe_threshold = cfg.sim.pe_threshold,
                          .steady_window = cfg.sim.steady_window,
                          .allow_uncertified = cfg.sim.allow_uncertified};
}

std::vector<RunSummary> sweep(const Json& base, const std::vector<OverrideSet>& variants,
                              Execution exec, const std::filesystem::path& base_dir) {
  const std::vector<OverrideSet> sets = variants.empty() ? std::vector<OverrideSet>{{}} : variants;
  std::vector<ExperimentConfig> configs;
  std::vector<std::optional<RunSummary>> failed(sets.size());
  std::vector<std::size_t> slot;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    try {
      Json doc = base;
      for (const auto& [path, value] : sets[i]) apply_override(doc, path, value);
      const ConfigFile cfg = parse_config(doc, base_dir);
      configs.push_back(make_experiment(cfg, resolve_reference(cfg).trajectory));
      slot.push_back(i);
    } catch (const std::exception& e) {
      RunSummary s;
      s.aborted = true;
      s.abort_reason = e.what();
      failed[i] = s;
    }
  }
  const auto ran = ampc::sweep(std::span<const ExperimentConfig>(configs), exec);
  std::vector<RunSummary> out(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (failed[i]) out[i] = *failed[i];
  }
  for (std::size_t r = 0; r < ran.size(); ++r) out[slot[r]] = ran[r];
  return out;
}

Json reference_to_json(const ReferenceTrajectory& traj) {
  Json j{{"M", traj.M},
         {"x_r", seq_json(traj.x_r)},
         {"u_r", seq_json(traj.u_r)},
         {"feasibility_residual", traj.feasibility_residual}};
  if (traj.pe) j["pe"] = to_json(*traj.pe);
  return j;
}

ReferenceTrajectory reference_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("x_r") || !doc.contains("u_r")) {
    throw ConfigError("reference file: expected keys 'x_r' and 'u_r'");
  }
  ReferenceTrajectory traj;
  const auto& xr = doc["x_r"];
  const auto& ur = doc["u_r"];
  if (!xr.is_array() || !ur.is_array() || xr.empty() || xr.size() != ur.size()) {
    throw ConfigError("reference file: x_r and u_r must be equally long non-empty lists");
  }
  traj.M = static_cast<int>(xr.size());
  traj.x_r = get_sequence(xr, "reference.x_r", get_vector(xr[0], "reference.x_r[0]").size());
  traj.u_r = get_sequence(ur, "reference.u_r", get_vector(ur[0], "reference.u_r[0]").size());
  return traj;
}

Json to_json(const PeCertificate& cert) {
  Json windows = Json::array();
  for (const auto& w : cert.per_window) windows.push_back({{"lambda_min", w.min}, {"lambda_max", w.max}});
  return {{"M", cert.M}, {"alpha", cert.alpha}, {"beta", cert.beta}, {"pass", cert.pass},
          {"windows", windows}};
}

Json to_json(const ReachabilityReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"matrix", mat_json(r.matrix)},
                    {"rank", r.rank},
                    {"output_reachable", r.output_reachable},
                    {"saturation_index", r.saturation_index}});
  }
  return {{"rows", rows}, {"any_reachable", report.any_reachable}, {"witness", report.witness}};
}

}  // namespace ampc
