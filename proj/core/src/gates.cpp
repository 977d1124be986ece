#include "spinbus/gates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "spinbus/errors.hpp"

namespace spinbus {

namespace {

constexpr double kPi = std::numbers::pi;

int swapped(int j) { return ((j & 1) << 1) | (j >> 1); }

QubitState random_qubit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Complex c0(gauss(rng), gauss(rng));
  Complex c1(gauss(rng), gauss(rng));
  const double norm = std::sqrt(std::norm(c0) + std::norm(c1));
  return {c0 / norm, c1 / norm};
}

}  // namespace

double wrap_phase(double angle) {
  double r = std::remainder(angle, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Eigen::Matrix4cd GateTarget::unitary() const {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  for (int j = 0; j < 4; ++j) u(swapped(j), j) = std::polar(1.0, phases[j]);
  return u;
}

double GateTarget::entangling_phase() const {
  return wrap_phase(phases[0] + phases[3] - phases[1] - phases[2]);
}

GateTarget ideal_phases(int chain_length) {
  if (chain_length < 2) throw DomainError("chain length must be at least 2");
  const double swap_phase = wrap_phase((chain_length + 1) * kPi / 2.0);
  return {{0.0, swap_phase, swap_phase, wrap_phase(chain_length * kPi)}};
}

std::string to_string(SpectatorPolicy policy) {
  switch (policy) {
    case SpectatorPolicy::Plus: return "plus";
    case SpectatorPolicy::Zero: return "zero";
    case SpectatorPolicy::HaarMean: return "haar-mean";
  }
  return "plus";
}

SpectatorPolicy parse_spectator_policy(const std::string& name) {
  if (name == "plus") return SpectatorPolicy::Plus;
  if (name == "zero") return SpectatorPolicy::Zero;
  if (name == "haar-mean") return SpectatorPolicy::HaarMean;
  throw DomainError("unknown spectator policy '" + name + "' (expected plus, zero or haar-mean)");
}

std::string to_string(TargetKind kind) { return kind == TargetKind::Ideal ? "ideal" : "calibrated"; }

TargetKind parse_target_kind(const std::string& name) {
  if (name == "calibrated") return TargetKind::Calibrated;
  if (name == "ideal") return TargetKind::Ideal;
  throw DomainError("unknown target kind '" + name + "' (expected calibrated or ideal)");
}

Eigen::Matrix4cd PairChannel::apply(const Eigen::Matrix4cd& rho) const {
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (int j = 0; j < 4; ++j) {
    for (int jp = 0; jp < 4; ++jp) out += rho(j, jp) * image(j, jp);
  }
  return out;
}

Matrix16cd PairChannel::choi() const {
  Matrix16cd c;
  for (int j = 0; j < 4; ++j) {
    for (int jp = 0; jp < 4; ++jp) c.block<4, 4>(4 * j, 4 * jp) = image(j, jp);
  }
  return c;
}

PairChannel PairChannel::identity() { return unitary(Eigen::Matrix4cd::Identity()); }

PairChannel PairChannel::unitary(const Eigen::Matrix4cd& u) {
  PairChannel ch;
  for (int j = 0; j < 4; ++j) {
    for (int jp = 0; jp < 4; ++jp) ch.image(j, jp) = u.col(j) * u.col(jp).adjoint();
  }
  return ch;
}

PairChannel PairChannel::depolarizing() {
  PairChannel ch;
  for (int j = 0; j < 4; ++j) {
    for (int jp = 0; jp < 4; ++jp) {
      ch.image(j, jp) = j == jp ? Eigen::Matrix4cd(Eigen::Matrix4cd::Identity() / 4.0) : Eigen::Matrix4cd::Zero();
    }
  }
  return ch;
}

CptpReport check_cptp(const PairChannel& channel) {
  CptpReport r;
  for (int j = 0; j < 4; ++j) {
    for (int jp = 0; jp < 4; ++jp) {
      const Complex tr = channel.image(j, jp).trace();
      r.trace_error = std::max(r.trace_error, std::abs(tr - (j == jp ? 1.0 : 0.0)));
      const Eigen::Matrix4cd diff = channel.image(j, jp) - channel.image(jp, j).adjoint();
      r.hermiticity_error = std::max(r.hermiticity_error, diff.cwiseAbs().maxCoeff());
    }
  }
  const Matrix16cd c = channel.choi();
  const Matrix16cd herm = (c + c.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix16cd> eig(herm, Eigen::EigenvaluesOnly);
  r.choi_min_eigenvalue = eig.eigenvalues().minCoeff();
  return r;
}

Calibration calibrate_phases_unchecked(const PairChannel& channel) {
  std::array<Complex, 4> amp{};
  for (int j = 0; j < 4; ++j) amp[j] = channel.image(j, 0)(swapped(j), 0);
  Calibration c;
  c.min_amplitude = std::abs(amp[0]);
  for (const Complex& a : amp) c.min_amplitude = std::min(c.min_amplitude, std::abs(a));
  const double ref = std::arg(amp[0]);
  auto unit = [](Complex z) { return std::abs(z) > 0.0 ? z / std::abs(z) : Complex{}; };
  const Complex mixed = unit(amp[1]) + unit(amp[2]);
  const double swap_phase = std::abs(mixed) > 0.0 ? wrap_phase(std::arg(mixed) - ref) : 0.0;
  c.target.phases = {0.0, swap_phase, swap_phase, wrap_phase(std::arg(amp[3]) - ref)};
  return c;
}

GateTarget calibrate_phases(const PairChannel& channel) {
  const Calibration c = calibrate_phases_unchecked(channel);
  if (c.min_amplitude < 0.5) {
    throw CalibrationError("swap amplitude " + std::to_string(c.min_amplitude) +
                           " below 0.5; the channel does not realize a swap gate");
  }
  return c.target;
}

double average_gate_fidelity(const PairChannel& channel, const Eigen::Matrix4cd& gate) {
  Complex sum{};
  for (int j = 0; j < 4; ++j) {
    for (int jp = 0; jp < 4; ++jp) {
      sum += gate.col(j).dot(channel.image(j, jp) * gate.col(jp));
    }
  }
  const Complex f = 0.2 + sum / 20.0;
  if (std::abs(f.imag()) > 1e-6) {
    throw NumericalError("average gate fidelity has imaginary part " + std::to_string(f.imag()));
  }
  return f.real();
}

double average_gate_fidelity(const PairChannel& channel, const GateTarget& gate) {
  return average_gate_fidelity(channel, gate.unitary());
}

FidelityEstimate haar_average_fidelity_mc(const PairChannel& channel, const Eigen::Matrix4cd& gate, int samples,
                                          std::uint64_t seed) {
  if (samples < 2) throw DomainError("Monte-Carlo fidelity needs at least two samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::Vector4cd psi;
    for (int i = 0; i < 4; ++i) psi[i] = Complex(gauss(rng), gauss(rng));
    psi.normalize();
    const Eigen::Matrix4cd out = channel.apply(psi * psi.adjoint());
    const Eigen::Vector4cd target = gate * psi;
    const double f = target.dot(out * target).real();
    sum += f;
    sum_sq += f * f;
  }
  const double n = samples;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

FidelityReport mean_fidelity(std::span<const PairChannel> channels, std::span<const GateTarget> gates) {
  if (channels.size() != gates.size()) throw DomainError("need one target gate per channel");
  if (channels.empty()) throw DomainError("mean fidelity of an empty channel list");
  FidelityReport report;
  report.time = channels.front().time;
  double total = 0.0;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    report.per_pair.push_back(average_gate_fidelity(channels[i], gates[i]));
    total += report.per_pair.back();
  }
  report.mean = total / static_cast<double>(channels.size());
  return report;
}

FidelityReport score_channels(std::span<const PairChannel> channels, TargetKind target, int chain_length) {
  std::vector<GateTarget> gates;
  gates.reserve(channels.size());
  for (const PairChannel& ch : channels) {
    gates.push_back(target == TargetKind::Ideal ? ideal_phases(chain_length) : calibrate_phases_unchecked(ch).target);
  }
  return mean_fidelity(channels, gates);
}

double concurrence(const Eigen::Matrix4cd& rho) {
  Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  const Eigen::Matrix4cd tilde = yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> eig(rho * tilde, false);
  std::array<double, 4> l{};
  for (int i = 0; i < 4; ++i) l[i] = std::sqrt(std::max(0.0, eig.eigenvalues()[i].real()));
  std::sort(l.begin(), l.end(), std::greater<>());
  return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

RegisterState pair_input_state(const SystemLayout& layout, std::size_t pair, int j,
                               std::span<const QubitState> spectator_a, std::span<const QubitState> spectator_b) {
  const auto m = static_cast<std::size_t>(layout.pair_count());
  if (pair >= m) throw DomainError("pair index out of range");
  if (spectator_a.size() != m || spectator_b.size() != m) throw DomainError("spectator list has wrong length");
  RegisterState regs{{spectator_a.begin(), spectator_a.end()}, {spectator_b.begin(), spectator_b.end()}};
  regs.a[pair] = QubitState::basis(j >> 1);
  regs.b[pair] = QubitState::basis(j & 1);
  return regs;
}

std::vector<int> channel_sectors(const SystemLayout& layout, SpectatorPolicy policy) {
  const int top = policy == SpectatorPolicy::Zero ? 2 : 2 * layout.pair_count();
  return sector_range(layout, 0, top);
}

std::vector<SpectatorSample> spectator_samples(const SystemLayout& layout, const ChannelOptions& options,
                                               std::size_t pair) {
  const auto m = static_cast<std::size_t>(layout.pair_count());
  if (pair >= m) throw DomainError("pair index " + std::to_string(pair) + " out of range");
  int count = 1;
  if (options.spectators == SpectatorPolicy::HaarMean && m > 1) {
    if (options.haar_samples < 1) throw DomainError("haar-mean policy needs at least one sample");
    count = options.haar_samples;
  }
  std::mt19937_64 rng(options.seed ^ (0x9E3779B97F4A7C15ULL * (pair + 1)));
  std::vector<SpectatorSample> out(static_cast<std::size_t>(count));
  for (SpectatorSample& s : out) {
    s.a.resize(m);
    s.b.resize(m);
    for (std::size_t v = 0; v < m; ++v) {
      switch (options.spectators) {
        case SpectatorPolicy::Plus: s.a[v] = s.b[v] = QubitState::plus(); break;
        case SpectatorPolicy::Zero: s.a[v] = s.b[v] = QubitState::ground(); break;
        case SpectatorPolicy::HaarMean:
          s.a[v] = random_qubit(rng);
          s.b[v] = random_qubit(rng);
          break;
      }
    }
  }
  return out;
}

void sweep_pair_channels(const SystemLayout& layout, const Propagator& propagator, const ChannelOptions& options,
                         std::span<const std::size_t> pairs, std::span<const double> times,
                         const std::function<void(std::size_t, std::span<const PairChannel>)>& visit) {
  const auto m = static_cast<std::size_t>(layout.pair_count());
  for (std::size_t p : pairs) {
    if (p >= m) throw DomainError("pair index " + std::to_string(p) + " out of range");
  }
  // Initial states laid out as [pair][sample][j].
  std::vector<SectorState> initial;
  int samples = 0;
  for (std::size_t p : pairs) {
    const std::vector<SpectatorSample> specs = spectator_samples(layout, options, p);
    samples = static_cast<int>(specs.size());
    for (const SpectatorSample& spec : specs) {
      for (int j = 0; j < 4; ++j) {
        initial.push_back(encode_product_state(layout, pair_input_state(layout, p, j, spec.a, spec.b)));
      }
    }
  }

  std::vector<int> sectors;
  for (const SectorState& s : initial) {
    for (const auto& [k, v] : s.sectors()) {
      if (std::find(sectors.begin(), sectors.end(), k) == sectors.end()) sectors.push_back(k);
    }
  }
  std::sort(sectors.begin(), sectors.end());
  for (int k : sectors) {
    if (!propagator.covers(k)) throw DomainError("propagator does not cover sector " + std::to_string(k));
  }
  std::vector<PairTracer> tracers;
  for (std::size_t p : pairs) tracers.emplace_back(layout, p, sectors);

  std::vector<PairChannel> channels(pairs.size());
  propagator.sweep(initial, times, [&](std::size_t ti, std::span<const SectorState> states) {
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
      PairChannel& ch = channels[pi];
      ch.pair = pairs[pi];
      ch.time = times[ti];
      ch.spectators = options.spectators;
      for (auto& img : ch.images) img.setZero();
      Eigen::MatrixXcd table(static_cast<Eigen::Index>(tracers[pi].rest_count()), 16);
      for (int s = 0; s < samples; ++s) {
        for (int j = 0; j < 4; ++j) {
          tracers[pi].gather(states[(pi * samples + s) * 4 + j], table, static_cast<std::size_t>(j));
        }
        const Matrix16cd gram = table.transpose() * table.conjugate();
        for (int j = 0; j < 4; ++j) {
          for (int jp = 0; jp < 4; ++jp) ch.image(j, jp) += gram.block<4, 4>(4 * j, 4 * jp);
        }
      }
      if (samples > 1) {
        for (auto& img : ch.images) img /= static_cast<double>(samples);
      }
    }
    visit(ti, channels);
  });
}

PairChannel reconstruct_pair_channel(const SystemLayout& layout, const Propagator& propagator,
                                     const ChannelOptions& options, std::size_t pair, double t) {
  PairChannel out;
  const std::size_t pairs[] = {pair};
  const double times[] = {t};
  sweep_pair_channels(layout, propagator, options, pairs, times,
                      [&](std::size_t, std::span<const PairChannel> chs) { out = chs[0]; });
  return out;
}

Eigen::MatrixXcd global_swap_amplitudes(const SystemLayout& layout, const Propagator& propagator, double t) {
  const int m = layout.pair_count();
  const std::size_t configs = std::size_t{1} << m;
  auto basis_state = [&](std::size_t a, std::size_t b) {
    RegisterState regs = RegisterState::all_ground(m);
    for (int v = 0; v < m; ++v) {
      regs.a[v] = QubitState::basis(static_cast<int>((a >> v) & 1U));
      regs.b[v] = QubitState::basis(static_cast<int>((b >> v) & 1U));
    }
    return encode_product_state(layout, regs);
  };
  std::vector<SectorState> initial;
  for (std::size_t a = 0; a < configs; ++a) {
    for (std::size_t b = 0; b < configs; ++b) initial.push_back(basis_state(a, b));
  }
  Eigen::MatrixXcd amps(static_cast<Eigen::Index>(configs), static_cast<Eigen::Index>(configs));
  const double times[] = {t};
  propagator.sweep(initial, times, [&](std::size_t, std::span<const SectorState> states) {
    for (std::size_t a = 0; a < configs; ++a) {
      for (std::size_t b = 0; b < configs; ++b) {
        amps(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            basis_state(b, a).inner(states[a * configs + b]);
      }
    }
  });
  return amps;
}

}  // namespace spinbus
