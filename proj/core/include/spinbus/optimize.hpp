#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spinbus/dynamics.hpp"
#include "spinbus/gates.hpp"
#include "spinbus/hamiltonian.hpp"
#include "spinbus/system.hpp"

namespace spinbus {

/// Closed interval sampled as min, min + step, ... (max included when on the grid).
struct GridRange {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
  static GridRange single(double value) { return {value, value, 1.0}; }
};

enum class Strategy { S1, S2 };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

/// Search space of one strategy. Grid values are in units of J.
/// S1 scans J0 with h0 = 0; S2 scans h0 with J0 = J.
struct StrategySpec {
  Strategy kind = Strategy::S1;
  double J = 1.0;
  GridRange j0{0.01, 1.0, 0.01};
  GridRange h0{20.0, 40.0, 1.0};
  std::vector<GridRange> h;  ///< one range per pair, sign alternating with the pair index
  GridRange tau{1.0, 500.0, 0.25};
  int refine_passes = 0;

  void validate(const SystemLayout& layout) const;
};

/// Default ranges: J0/J in [0.01, 1], h0/J in [20, 40], h_v/J in (-1)^v [0, 1.5]
/// (0-based v), Jtau in [1, 500] with steps 0.01, 1, 0.05 and 0.25.
StrategySpec default_strategy(Strategy kind, int pair_count);

struct EvaluationOptions {
  ChannelOptions channel;
  TargetKind target = TargetKind::Calibrated;
  PropagatorOptions propagator;
};

struct PointResult {
  HamiltonianParams params;
  double tau = 0.0;
  double fidelity = 0.0;
  std::vector<double> per_pair;
  bool ok = false;
  std::string error;
};

/// Best (tau, F) over `taus` for fixed parameters, reusing one propagator.
/// `on_time`, when set, sees the report of every tau in order.
PointResult evaluate_point(const SystemLayout& layout, const HamiltonianParams& params, std::span<const double> taus,
                           const EvaluationOptions& options,
                           const std::function<void(const FidelityReport&)>& on_time = {});

struct OptimizationResult {
  PointResult best;
  std::vector<PointResult> landscape;  ///< every evaluated grid point, in grid order
  std::size_t evaluated = 0;
  std::size_t failed = 0;
};

/// Exhaustive grid search; ties go to the first grid point in enumeration
/// order (strategy axis outermost, then h_1 ... h_M, tau innermost), so the
/// argmax does not depend on the worker count.
OptimizationResult optimize(const SystemLayout& layout, const StrategySpec& spec, const EvaluationOptions& options,
                            int workers = 1);

/// Hamiltonian parameters of a strategy at the given axis values.
HamiltonianParams strategy_params(const StrategySpec& spec, double axis_value, std::span<const double> fields);

}  // namespace spinbus
