#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace ampc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAborted = 2;
inline constexpr int kExitConfig = 3;

struct Options {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // overrides output.directory
  std::optional<std::uint64_t> seed;
  bool json = false;
  // simulate
  bool no_noise = false;
  bool fixed_theta = false;
  // sweep
  std::optional<std::filesystem::path> sweep_spec;
  bool serial = false;
};

int cmd_refgen(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_check(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const Options& opts, std::ostream& out, std::ostream& err);

}  // namespace ampc::cli
