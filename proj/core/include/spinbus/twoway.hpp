#pragma once

#include <span>
#include <vector>

#include "spinbus/dynamics.hpp"
#include "spinbus/system.hpp"

namespace spinbus {

/// Register inputs for two-way exchange: A_v starts in psi[v], B_v in phi[v].
struct TwoWayScenario {
  std::vector<QubitState> psi;
  std::vector<QubitState> phi;

  void validate(const SystemLayout& layout) const;

  RegisterState initial() const;
  /// Every pair swapped: A_v holds phi[v], B_v holds psi[v].
  RegisterState transmitted() const;
  /// Contents delivered to the mirrored pair: A_v holds phi[M-1-v], B_v holds psi[M-1-v].
  RegisterState crosstalk() const;

  /// psi = (|+>, |0>), phi = (|0>, |1>).
  static TwoWayScenario example_two_pairs();
};

struct TwoWaySample {
  double time = 0.0;
  double transmission = 0.0;
  double crosstalk = 0.0;
};

struct TwoWaySeries {
  std::vector<TwoWaySample> samples;
  /// Sample with the largest transmission (first one on ties).
  TwoWaySample peak;
  double max_crosstalk = 0.0;
};

/// |<Phi_T|e^{-iHt}|Psi_0>|^2 and |<Phi_C|e^{-iHt}|Psi_0>|^2 over `times`.
TwoWaySeries transmission_and_crosstalk(const SystemLayout& layout, const Propagator& propagator,
                                        const TwoWayScenario& scenario, std::span<const double> times);

}  // namespace spinbus
