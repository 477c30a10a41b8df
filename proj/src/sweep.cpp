#include "ampc/loop.hpp"

namespace ampc {
namespace {

RunSummary run_one(const ExperimentConfig& cfg) {
  try {
    return summarize(run(cfg), cfg);
  } catch (const std::exception& e) {
    RunSummary s;
    s.seed = cfg.seed;
    s.aborted = true;
    s.abort_reason = e.what();
    return s;
  }
}

}  // namespace

std::vector<RunSummary> sweep(std::span<const ExperimentConfig> configs, Execution exec) {
  std::vector<RunSummary> out(configs.size());
  const auto count = static_cast<long>(configs.size());
  if (exec == Execution::Serial) {
    for (long i = 0; i < count; ++i) out[i] = run_one(configs[i]);
    return out;
  }
  // Each run owns its RNG stream and workspace; slot i is written only by
  // the thread executing run i.
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) out[i] = run_one(configs[i]);
  return out;
}

}  // namespace ampc
