// cli.hpp: experiment runner: subcommands, outputs and the invariant suite
#pragma once

#include <string>
#include <vector>

#include "nelson/config.hpp"

namespace nelson {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

struct CheckRow {
  std::string name;
  double value = 0;
  double threshold = 0;
  bool pass = false;
};

// Invariants of every module on the configured (small) problem.
std::vector<CheckRow> invariant_suite(const RunConfig& cfg);

// nelson-lab <subcommand> --config <path> [--set key=value]... [--threads N]
int run_cli(int argc, char** argv);

}  // namespace nelson
