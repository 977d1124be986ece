#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace spinbus::cli {

enum ExitCode : int {
  kSuccess = 0,
  kRuntimeFailure = 1,
  kConfigError = 2,
  kNumericalError = 3,
};

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out = ".";
  int workers = 1;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

/// Paths of the artifacts written by one run.
struct Artifacts {
  std::filesystem::path csv;
  std::filesystem::path json;
  std::filesystem::path replay;  ///< optimize only
};

/// Runs one experiment; throws ConfigError, DomainError or NumericalError.
Artifacts run_experiment(const RunOptions& options, std::ostream& summary, std::ostream& log);

/// Parses argv, runs, and maps failures to exit codes.
int run_cli(int argc, char** argv);

}  // namespace spinbus::cli
