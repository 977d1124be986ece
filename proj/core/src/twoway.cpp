#include "spinbus/twoway.hpp"

#include <cmath>
#include <string>

#include "spinbus/errors.hpp"

namespace spinbus {

void TwoWayScenario::validate(const SystemLayout& layout) const {
  const auto m = static_cast<std::size_t>(layout.pair_count());
  if (psi.size() != m || phi.size() != m) {
    throw DomainError("two-way scenario needs " + std::to_string(m) + " states per register");
  }
  for (const auto* side : {&psi, &phi}) {
    for (const QubitState& q : *side) {
      if (std::abs(q.norm_squared() - 1.0) > 1e-10) throw DomainError("two-way input states must be normalized");
    }
  }
}

RegisterState TwoWayScenario::initial() const { return {psi, phi}; }

RegisterState TwoWayScenario::transmitted() const { return {phi, psi}; }

RegisterState TwoWayScenario::crosstalk() const {
  return {{phi.rbegin(), phi.rend()}, {psi.rbegin(), psi.rend()}};
}

TwoWayScenario TwoWayScenario::example_two_pairs() {
  return {{QubitState::plus(), QubitState::ground()}, {QubitState::ground(), QubitState::excited()}};
}

TwoWaySeries transmission_and_crosstalk(const SystemLayout& layout, const Propagator& propagator,
                                        const TwoWayScenario& scenario, std::span<const double> times) {
  scenario.validate(layout);
  const SectorState psi0 = encode_product_state(layout, scenario.initial());
  const SectorState target = encode_product_state(layout, scenario.transmitted());
  const SectorState cross = encode_product_state(layout, scenario.crosstalk());

  TwoWaySeries out;
  out.samples.reserve(times.size());
  propagator.sweep(std::span<const SectorState>(&psi0, 1), times,
                   [&](std::size_t ti, std::span<const SectorState> states) {
                     TwoWaySample s;
                     s.time = times[ti];
                     s.transmission = std::norm(target.inner(states[0]));
                     s.crosstalk = std::norm(cross.inner(states[0]));
                     if (out.samples.empty() || s.transmission > out.peak.transmission) out.peak = s;
                     out.max_crosstalk = std::max(out.max_crosstalk, s.crosstalk);
                     out.samples.push_back(s);
                   });
  return out;
}

}  // namespace spinbus
