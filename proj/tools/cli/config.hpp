#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinbus/noise.hpp"
#include "spinbus/optimize.hpp"
#include "spinbus/twoway.hpp"

namespace spinbus::cli {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Evolve, Fidelity, Optimize, Noise, TwoWay };

std::string to_string(Command c);

struct ExperimentConfig {
  Command command = Command::Fidelity;
  int N = 0;
  int M = 0;
  std::uint64_t seed = 0;

  HamiltonianParams params;        ///< evolve, fidelity, noise, twoway
  StrategySpec strategy;           ///< optimize
  std::vector<double> times;       ///< Jt grid (evolve, twoway) or Jtau list (fidelity)
  double tau = 0.0;                ///< noise
  EvaluationOptions evaluation;
  NoiseSpec noise;
  std::vector<double> gammas;      ///< noise, in units of J
  TwoWayScenario scenario;         ///< twoway
  RegisterState initial;           ///< evolve

  /// The parsed document with the effective seed; hashed to name artifacts.
  nlohmann::json document;

  SystemLayout layout() const { return SystemLayout(N, M); }
};

/// Parses and validates a config document. Unknown keys are rejected.
/// `seed_override` replaces the document's seed when set.
ExperimentConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = {});

/// `fidelity` config that re-evaluates a single point of `source`.
nlohmann::json replay_config(const ExperimentConfig& source, const HamiltonianParams& params, double tau);

}  // namespace spinbus::cli
