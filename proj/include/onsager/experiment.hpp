#pragma once

#include <iosfwd>
#include <string>

#include "onsager/config.hpp"

namespace onsager {

struct RunResult {
  /// 0 ok, 3 non-convergence, 4 kernel validation failure.
  int exit_code = 0;
  std::string message;
};

/// Executes a full experiment: kernel validation, continuation along the b
/// schedule, and the requested analyses; writes traces, densities, branch
/// tables and reports under cfg.output_dir. All randomness derives from
/// cfg.seed, so identical configs produce byte-identical artifacts.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream& log, bool quiet = false);

/// Resolves the output directory: explicit value, else the ONSAGER_OUT
/// environment variable, else "onsager_out".
std::string resolve_output_dir(const std::string& configured);

}  // namespace onsager
