#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinbus/dynamics.hpp"
#include "spinbus/system.hpp"

namespace spinbus {

using Matrix16cd = Eigen::Matrix<Complex, 16, 16>;

/// Two-qubit swap with state-dependent phases, G|a>|b> = e^{i phi_ab}|b>|a>.
/// phases are indexed by 2*a + b (a on A_v, b on B_v).
struct GateTarget {
  std::array<double, 4> phases{};

  Eigen::Matrix4cd unitary() const;
  /// phi_00 + phi_11 - phi_01 - phi_10, wrapped to (-pi, pi].
  double entangling_phase() const;
};

/// Free-fermion phases of a single pair: 0, (N+1)pi/2, (N+1)pi/2, N pi (mod 2pi).
GateTarget ideal_phases(int chain_length);

/// Wraps an angle to (-pi, pi].
double wrap_phase(double angle);

/// How the qubits of the other pairs are prepared while reconstructing
/// the channel of one pair.
enum class SpectatorPolicy { Plus, Zero, HaarMean };

std::string to_string(SpectatorPolicy policy);
SpectatorPolicy parse_spectator_policy(const std::string& name);

/// Target gate used when scoring a channel.
enum class TargetKind { Calibrated, Ideal };

std::string to_string(TargetKind kind);
TargetKind parse_target_kind(const std::string& name);

struct ChannelOptions {
  SpectatorPolicy spectators = SpectatorPolicy::Plus;
  /// Random spectator assignments averaged by SpectatorPolicy::HaarMean.
  int haar_samples = 8;
  std::uint64_t seed = 0;
};

/// Pair channel Lambda(t) stored by its action on the 16 operators |j><j'|.
struct PairChannel {
  std::size_t pair = 0;
  double time = 0.0;
  SpectatorPolicy spectators = SpectatorPolicy::Plus;
  std::array<Eigen::Matrix4cd, 16> images{};

  const Eigen::Matrix4cd& image(int j, int jp) const { return images[4 * j + jp]; }
  Eigen::Matrix4cd& image(int j, int jp) { return images[4 * j + jp]; }

  Eigen::Matrix4cd apply(const Eigen::Matrix4cd& rho) const;
  /// sum_{jj'} |j><j'| (x) Lambda[|j><j'|].
  Matrix16cd choi() const;

  static PairChannel identity();
  static PairChannel unitary(const Eigen::Matrix4cd& u);
  /// Lambda[X] = Tr(X) I/4.
  static PairChannel depolarizing();
};

struct CptpReport {
  double trace_error = 0.0;        ///< max |Tr Lambda[|j><j'|] - delta_jj'|
  double hermiticity_error = 0.0;  ///< max |Lambda[|j><j'|] - Lambda[|j'><j|]^dagger|
  double choi_min_eigenvalue = 0.0;

  bool ok(double trace_tol = 1e-10, double herm_tol = 1e-10, double psd_floor = -1e-9) const {
    return trace_error <= trace_tol && hermiticity_error <= herm_tol && choi_min_eigenvalue >= psd_floor;
  }
};

CptpReport check_cptp(const PairChannel& channel);

struct Calibration {
  GateTarget target;
  /// Smallest |<ba|Lambda[|ab><00|]|00>| over the four inputs.
  double min_amplitude = 0.0;
};

/// Phases read off the swap amplitudes of a channel without any
/// reliability check; phi_00 = 0 and phi_01 = phi_10 by averaging.
Calibration calibrate_phases_unchecked(const PairChannel& channel);

/// As above, but throws CalibrationError when a swap amplitude is below 0.5.
GateTarget calibrate_phases(const PairChannel& channel);

/// Closed-form average gate fidelity against a 4x4 unitary.
double average_gate_fidelity(const PairChannel& channel, const Eigen::Matrix4cd& gate);
double average_gate_fidelity(const PairChannel& channel, const GateTarget& gate);

struct FidelityEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo average of <psi|G^dag Lambda[|psi><psi|] G|psi> over Haar-random
/// two-qubit pure states; deterministic for a fixed seed.
FidelityEstimate haar_average_fidelity_mc(const PairChannel& channel, const Eigen::Matrix4cd& gate, int samples,
                                          std::uint64_t seed);

struct FidelityReport {
  double time = 0.0;
  std::vector<double> per_pair;
  double mean = 0.0;
};

FidelityReport mean_fidelity(std::span<const PairChannel> channels, std::span<const GateTarget> gates);

/// Scores channels against the chosen target kind (ideal phases need the chain length).
FidelityReport score_channels(std::span<const PairChannel> channels, TargetKind target, int chain_length);

/// Wootters concurrence of a two-qubit density matrix.
double concurrence(const Eigen::Matrix4cd& rho);

/// Initial register state with pair `pair` in |a b> = |j> and the spectators per policy.
RegisterState pair_input_state(const SystemLayout& layout, std::size_t pair, int j,
                               std::span<const QubitState> spectator_a, std::span<const QubitState> spectator_b);

struct SpectatorSample {
  std::vector<QubitState> a;
  std::vector<QubitState> b;
};

/// Spectator assignments used for `pair`: one for plus/zero, haar_samples
/// random ones for haar-mean (seeded per pair, so independent of which other
/// pairs are reconstructed alongside).
std::vector<SpectatorSample> spectator_samples(const SystemLayout& layout, const ChannelOptions& options,
                                               std::size_t pair);

/// Sectors touched by the initial states of channel reconstruction.
std::vector<int> channel_sectors(const SystemLayout& layout, SpectatorPolicy policy);

/// Reconstructs the channels of the selected pairs at every time in `times`,
/// calling `visit` with one PairChannel per selected pair (in order).
void sweep_pair_channels(const SystemLayout& layout, const Propagator& propagator, const ChannelOptions& options,
                         std::span<const std::size_t> pairs, std::span<const double> times,
                         const std::function<void(std::size_t, std::span<const PairChannel>)>& visit);

PairChannel reconstruct_pair_channel(const SystemLayout& layout, const Propagator& propagator,
                                     const ChannelOptions& options, std::size_t pair, double t);

/// Amplitudes <b,0,a| exp(-iHt) |a,0,b> of the global register swap, indexed
/// [a][b] with a and b the register bitmasks (bit v = pair v).
Eigen::MatrixXcd global_swap_amplitudes(const SystemLayout& layout, const Propagator& propagator, double t);

}  // namespace spinbus
