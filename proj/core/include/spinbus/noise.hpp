#pragma once

#include <map>
#include <string>
#include <span>
#include <utility>

#include <Eigen/Dense>

#include "spinbus/dynamics.hpp"
#include "spinbus/gates.hpp"
#include "spinbus/hamiltonian.hpp"
#include "spinbus/optimize.hpp"
#include "spinbus/system.hpp"

namespace spinbus {

enum class LindbladIntegrator {
  /// Arnoldi exponential of each block generator in outer steps of krylov_step.
  Krylov,
  /// Classical RK4 with step dt in the frame of H (integrating factor).
  RK4,
};

std::string to_string(LindbladIntegrator integrator);
LindbladIntegrator parse_lindblad_integrator(const std::string& name);

/// Site-local sigma^z dephasing. Rates and steps are in units of J.
struct NoiseSpec {
  double gamma = 0.0;
  LindbladIntegrator integrator = LindbladIntegrator::Krylov;
  double dt = 0.01;
  double krylov_step = 5.0;
  int krylov_dim = 30;
  double krylov_tolerance = 1e-11;
  /// Allowed |Tr rho(t) - Tr rho(0)| before the step is halved.
  double trace_tolerance = 1e-6;
  int max_halvings = 6;
  /// Dephase register sites too; false restricts the sum to the chain.
  bool include_registers = true;

  void validate() const;
  /// Sites the dissipator acts on.
  Bits dephased_sites(const SystemLayout& layout) const;
};

using SectorPair = std::pair<int, int>;

/// Operator on the Hilbert space stored as sector blocks (k, k'), each of
/// shape dim(k) x dim(k'); absent blocks are zero.
class DensityState {
 public:
  explicit DensityState(const SystemLayout& layout) : layout_(layout) {}

  /// |ket><bra|.
  static DensityState outer(const SectorState& ket, const SectorState& bra);

  const SystemLayout& layout() const { return layout_; }
  const std::map<SectorPair, Eigen::MatrixXcd>& blocks() const { return blocks_; }
  std::map<SectorPair, Eigen::MatrixXcd>& blocks() { return blocks_; }

  bool has_block(int k, int kp) const { return blocks_.contains({k, kp}); }
  const Eigen::MatrixXcd& block(int k, int kp) const;
  void set_block(int k, int kp, Eigen::MatrixXcd values);

  Complex trace() const;
  /// max |rho(k,k') - rho(k',k)^dagger| over stored blocks.
  double hermiticity_error() const;
  /// Tr rho^2.
  Complex purity() const;
  /// <row|rho|col> for occupation basis states.
  Complex element(Bits row, Bits col) const;

 private:
  SystemLayout layout_;
  std::map<SectorPair, Eigen::MatrixXcd> blocks_;
};

/// Reduced operator on pair (A_v, B_v), same basis as PairTracer.
Eigen::Matrix4cd partial_trace_pair(const DensityState& rho, const PairTracer& tracer);

/// -i[H, rho] + gamma sum_i (Z_i rho Z_i - rho), i over `sites`.
DensityState lindblad_rhs(const DensityState& rho, std::span<const SectorOperator> hamiltonian, double gamma,
                          Bits sites);

/// Integrates the dephasing master equation to time t. Times and rates are
/// absolute here (the propagator's units); noisy_pair_channels converts from
/// units of J. Blocks evolve independently. The RK4 integrator needs spectral
/// sectors and is exact at gamma = 0; both integrators halve their step and
/// retry when the trace of a diagonal block drifts.
DensityState evolve_lindblad(const DensityState& rho0, const Propagator& propagator, const NoiseSpec& spec, double t);

/// Pair channels at Jtau under dephasing, scored like the unitary case. The
/// calibrated target is taken from the noiseless channel at the same time.
FidelityReport noisy_mean_fidelity(const SystemLayout& layout, const HamiltonianParams& params, double tau,
                                   const NoiseSpec& spec, const EvaluationOptions& options, int workers = 1);

/// The noisy channels themselves (one per pair).
std::vector<PairChannel> noisy_pair_channels(const SystemLayout& layout, const HamiltonianParams& params, double tau,
                                             const NoiseSpec& spec, const ChannelOptions& options, int workers = 1);

}  // namespace spinbus
