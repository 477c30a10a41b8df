#include "ampc/config.hpp"

#include <benchmark/benchmark.h>


namespace {

// Scalar bilinear plant with a four-step sinusoidal reference.
ampc::Json base_document() {
  return ampc::Json::parse(R"({
    "model": {"n": 1, "m": 1,
      "f0": [[{"coeff": 1.0, "x_powers": [0], "u_powers": [1]}]],
      "basis": [[[{"coeff": 1.0, "x_powers": [1], "u_powers": [0]}]],
                [[{"coeff": 1.0, "x_powers": [1], "u_powers": [1]}]]],
      "theta_true": [1.1, 0.1], "w_bar": 0.2},
    "reference": {"mode": "generate", "u_s": [-0.09], "x_guess": [1.0], "M": 4, "amplitude": 0.3},
    "mpc": {"Q": [[6.0]], "R": [[0.1]], "N": 4, "hessian_check": "off"},
    "rls": {"lambda": 0.9, "T": [[1.0]], "theta_hat_0": [1.5, -0.4]},
    "sim": {"K_total": 200, "seed": 1}
  })");
}

std::vector<ampc::OverrideSet> seeds(int count) {
  std::vector<ampc::OverrideSet> v;
  for (int s = 0; s < count; ++s) v.push_back({{"sim.seed", s + 1}});
  return v;
}

void BM_SweepSerial(benchmark::State& state) {
  const auto doc = base_document();
  const auto variants = seeds(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ampc::sweep(doc, variants, ampc::Execution::Serial));
  }
}

void BM_SweepParallel(benchmark::State& state) {
  const auto doc = base_document();
  const auto variants = seeds(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ampc::sweep(doc, variants, ampc::Execution::Parallel));
  }
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
