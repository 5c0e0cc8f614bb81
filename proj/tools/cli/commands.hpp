#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace flexform::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDegenerate = 3,
  kExitDivergence = 4,
  kExitEquilibrium = 5,
};

/// Exit code for a library error kind.
int exit_code_for(ErrorKind kind);

/// Augmentation used by the stability-facing commands: greedy virtual edges
/// for a flexible formation with independent edges, none for a minimally
/// rigid one. Throws Error(AugmentationFailed) otherwise.
VirtualAugmentation select_augmentation(const RunConfig& config);

struct AnalyzeArgs {
  std::string out;
};
struct SimulateArgs {
  std::string csv;
  std::string summary;
  std::string plot;
};
struct StabilityArgs {
  std::string out;
};
struct SweepArgs {
  std::string direction;
  std::vector<double> epsilons;
  std::string csv;
  std::string footer;
};

int cmd_analyze(const RunConfig& config, const AnalyzeArgs& args, std::ostream& out);
int cmd_simulate(const RunConfig& config, const SimulateArgs& args, std::ostream& out);
int cmd_stability(const RunConfig& config, const StabilityArgs& args, std::ostream& out);
int cmd_sweep(const RunConfig& config, const SweepArgs& args, std::ostream& out);

/// Full command line without the program name. Never throws; errors are
/// reported on `err` and mapped to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flexform::cli
