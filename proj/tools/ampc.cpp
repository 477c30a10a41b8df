#include "ampc/commands.hpp"
#include "ampc/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <vector>

int main(int argc, char** argv) {
  using namespace ampc::cli;
  CLI::App app{"Adaptive MPC with persistently exciting periodic references"};
  app.require_subcommand(1);

  Options opts;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> seed_opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", opts.config, "experiment configuration file")->required();
    sub->add_option("--out,-o", out_dir, "output directory (overrides output.directory)");
    seed_opts.push_back(sub->add_option("--seed", seed, "disturbance seed (overrides sim.seed)"));
    sub->add_flag("--json", opts.json, "machine-readable output on stdout");
  };

  auto* refgen = app.add_subcommand("refgen", "generate and certify a periodic reference");
  add_common(refgen);
  auto* simulate = app.add_subcommand("simulate", "run the closed loop");
  add_common(simulate);
  simulate->add_flag("--no-noise", opts.no_noise, "set the disturbance bound to zero");
  simulate->add_flag("--fixed-theta", opts.fixed_theta, "keep the initial estimate (no adaptation)");
  auto* check = app.add_subcommand("check", "evaluate structural hypotheses at the equilibrium");
  add_common(check);
  auto* sweep = app.add_subcommand("sweep", "run a grid of configurations over seeds");
  add_common(sweep);
  std::string spec;
  sweep->add_option("--spec", spec, "sweep description: {grid: {path: [values]}, seeds, base_seed}");
  sweep->add_flag("--serial", opts.serial, "run without OpenMP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  if (!out_dir.empty()) opts.out = out_dir;
  for (const auto* o : seed_opts)
    if (o->count() > 0) opts.seed = seed;
  if (!spec.empty()) opts.sweep_spec = spec;

  try {
    if (refgen->parsed()) return cmd_refgen(opts, std::cout, std::cerr);
    if (simulate->parsed()) return cmd_simulate(opts, std::cout, std::cerr);
    if (check->parsed()) return cmd_check(opts, std::cout, std::cerr);
    return cmd_sweep(opts, std::cout, std::cerr);
  } catch (const ampc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ampc::Error& e) {
    std::cerr << "error (" << ampc::to_string(e.code()) << "): " << e.what() << '\n';
    return kExitAborted;
  }
}
