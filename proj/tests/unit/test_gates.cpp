#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dense_oracle.hpp"
#include "spinbus/errors.hpp"
#include "spinbus/gates.hpp"

using namespace spinbus;

namespace {

constexpr double kPi = std::numbers::pi;

HamiltonianParams params(double j0, double h0, std::vector<double> h) {
  HamiltonianParams p;
  p.J0 = j0;
  p.h0 = h0;
  p.h = std::move(h);
  return p;
}

double max_diff(const PairChannel& a, const PairChannel& b) {
  double d = 0.0;
  for (int i = 0; i < 16; ++i) d = std::max(d, (a.images[i] - b.images[i]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST(Phases, WrapRange) {
  EXPECT_NEAR(wrap_phase(3 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_phase(-kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_phase(0.5), 0.5, 1e-15);
  EXPECT_NEAR(wrap_phase(-7 * kPi / 2), kPi / 2, 1e-12);
}

TEST(Phases, IdealFreeFermionPhases) {
  const GateTarget g5 = ideal_phases(5);
  EXPECT_NEAR(g5.phases[0], 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g5.phases[1]), kPi, 1e-12);
  EXPECT_NEAR(std::abs(g5.phases[3]), kPi, 1e-12);
  const GateTarget g4 = ideal_phases(4);
  EXPECT_NEAR(g4.phases[1], kPi / 2, 1e-12);
  EXPECT_NEAR(g4.phases[3], 0.0, 1e-12);
  // Entangling combination is pi for every chain length.
  for (int n = 2; n < 12; ++n) EXPECT_NEAR(std::abs(ideal_phases(n).entangling_phase()), kPi, 1e-12);
  EXPECT_THROW(ideal_phases(1), DomainError);
}

TEST(Phases, TargetUnitarySwapsWithPhases) {
  const GateTarget g{{0.1, 0.2, 0.3, 0.4}};
  const Eigen::Matrix4cd u = g.unitary();
  EXPECT_LT((u.adjoint() * u - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(std::abs(u(2, 1) - std::polar(1.0, 0.2)), 0.0, 1e-15);  // |01> -> |10>
  EXPECT_NEAR(std::abs(u(1, 2) - std::polar(1.0, 0.3)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(u(3, 3) - std::polar(1.0, 0.4)), 0.0, 1e-15);
}

TEST(Policies, ParseAndPrint) {
  for (auto p : {SpectatorPolicy::Plus, SpectatorPolicy::Zero, SpectatorPolicy::HaarMean}) {
    EXPECT_EQ(parse_spectator_policy(to_string(p)), p);
  }
  for (auto t : {TargetKind::Calibrated, TargetKind::Ideal}) EXPECT_EQ(parse_target_kind(to_string(t)), t);
  EXPECT_THROW(parse_spectator_policy("random"), DomainError);
  EXPECT_THROW(parse_target_kind("best"), DomainError);
}

TEST(Channel, StandardChannelsAreCptp) {
  std::mt19937_64 rng(3);
  for (const PairChannel& ch : {PairChannel::identity(), PairChannel::depolarizing(),
                                PairChannel::unitary(oracle::random_unitary(rng)), oracle::random_channel(rng, 3)}) {
    const CptpReport r = check_cptp(ch);
    EXPECT_TRUE(r.ok()) << r.trace_error << " " << r.hermiticity_error << " " << r.choi_min_eigenvalue;
  }
  PairChannel broken = PairChannel::identity();
  broken.image(0, 0)(0, 0) = 2.0;
  EXPECT_FALSE(check_cptp(broken).ok());
}

TEST(Channel, ApplyMatchesUnitaryConjugation) {
  std::mt19937_64 rng(5);
  const Eigen::Matrix4cd u = oracle::random_unitary(rng);
  const PairChannel ch = PairChannel::unitary(u);
  Eigen::Vector4cd psi = oracle::random_unitary(rng).col(0);
  const Eigen::Matrix4cd rho = psi * psi.adjoint();
  EXPECT_LT((ch.apply(rho) - u * rho * u.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Fidelity, KnownValues) {
  std::mt19937_64 rng(9);
  const Eigen::Matrix4cd u = oracle::random_unitary(rng);
  EXPECT_NEAR(average_gate_fidelity(PairChannel::unitary(u), u), 1.0, 1e-14);
  EXPECT_NEAR(average_gate_fidelity(PairChannel::identity(), Eigen::Matrix4cd::Identity()), 1.0, 1e-14);
  // Depolarizing channel: (d F_pro + 1) / (d + 1) with F_pro = 1/16.
  EXPECT_NEAR(average_gate_fidelity(PairChannel::depolarizing(), u), 0.25, 1e-14);
  // Identity against the swap: F_pro = |Tr S|^2 / 16 = 1/4, so F = 2/5.
  EXPECT_NEAR(average_gate_fidelity(PairChannel::identity(), GateTarget{}), 0.4, 1e-14);
}

TEST(Fidelity, ClosedFormAgreesWithHaarMonteCarlo) {
  std::mt19937_64 rng(21);
  for (int c = 0; c < 20; ++c) {
    const PairChannel ch = oracle::random_channel(rng, 1 + c % 4);
    const Eigen::Matrix4cd gate = oracle::random_unitary(rng);
    const double exact = average_gate_fidelity(ch, gate);
    const FidelityEstimate mc = haar_average_fidelity_mc(ch, gate, 2000, 100 + c);
    EXPECT_LT(std::abs(mc.mean - exact), 3.0 * mc.standard_error) << "channel " << c;
  }
  EXPECT_THROW(haar_average_fidelity_mc(PairChannel::identity(), Eigen::Matrix4cd::Identity(), 1, 0), DomainError);
}

TEST(Fidelity, MeanAndScoring) {
  const PairChannel chs[] = {PairChannel::unitary(ideal_phases(4).unitary()), PairChannel::depolarizing()};
  const FidelityReport r = score_channels(chs, TargetKind::Ideal, 4);
  ASSERT_EQ(r.per_pair.size(), 2U);
  EXPECT_NEAR(r.per_pair[0], 1.0, 1e-14);
  EXPECT_NEAR(r.per_pair[1], 0.25, 1e-14);
  EXPECT_NEAR(r.mean, 0.625, 1e-14);
  const GateTarget one[] = {GateTarget{}};
  EXPECT_THROW(mean_fidelity(chs, one), DomainError);
}

TEST(Calibration, RecoversPhasesOfASwapGate) {
  const GateTarget g{{0.0, 1.1, 1.1, -2.5}};
  const PairChannel ch = PairChannel::unitary(std::polar(1.0, 0.7) * g.unitary());
  const GateTarget c = calibrate_phases(ch);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(wrap_phase(c.phases[j] - g.phases[j]), 0.0, 1e-12);
  EXPECT_NEAR(calibrate_phases_unchecked(ch).min_amplitude, 1.0, 1e-14);
  EXPECT_THROW(calibrate_phases(PairChannel::identity()), CalibrationError);
}

TEST(Concurrence, BellProductAndMixed) {
  Eigen::Vector4cd bell(1, 0, 0, 1);
  bell /= std::sqrt(2.0);
  EXPECT_NEAR(concurrence(bell * bell.adjoint()), 1.0, 1e-12);
  const Eigen::Vector4cd prod = Eigen::Vector4cd::Constant(0.5);
  EXPECT_NEAR(concurrence(prod * prod.adjoint()), 0.0, 1e-7);
  EXPECT_NEAR(concurrence(Eigen::Matrix4cd::Identity() / 4.0), 0.0, 1e-12);
  // Controlled-phase of pi on |+>|+> is maximally entangled. Square roots of
  // near-zero eigenvalues limit the accuracy to ~sqrt(eps).
  const GateTarget g = ideal_phases(5);
  const Eigen::Vector4cd out = g.unitary() * prod;
  EXPECT_NEAR(concurrence(out * out.adjoint()), 1.0, 1e-7);
}

TEST(Spectators, SamplesPerPolicy) {
  const SystemLayout l(3, 3);
  ChannelOptions o;
  EXPECT_EQ(spectator_samples(l, o, 0).size(), 1U);
  o.spectators = SpectatorPolicy::HaarMean;
  o.haar_samples = 5;
  const auto a = spectator_samples(l, o, 1);
  EXPECT_EQ(a.size(), 5U);
  const auto b = spectator_samples(l, o, 1);
  EXPECT_EQ(a[4].a[2].zero, b[4].a[2].zero);
  const auto c = spectator_samples(l, o, 2);
  EXPECT_NE(a[0].a[0].zero, c[0].a[0].zero);
  o.haar_samples = 0;
  EXPECT_THROW(spectator_samples(l, o, 0), DomainError);
  EXPECT_THROW(spectator_samples(l, ChannelOptions{}, 3), DomainError);
  // With one pair there are no spectators to average over.
  o.haar_samples = 5;
  EXPECT_EQ(spectator_samples(SystemLayout(3, 1), o, 0).size(), 1U);
}

TEST(Spectators, ChannelSectors) {
  const SystemLayout l(3, 3);
  EXPECT_EQ(channel_sectors(l, SpectatorPolicy::Zero), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(channel_sectors(l, SpectatorPolicy::Plus), (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
}

TEST(Reconstruction, MatchesDenseOracleForEveryPolicy) {
  struct Case {
    int big_n, m;
    HamiltonianParams p;
    double t;
  };
  const Case cases[] = {{2, 1, params(0.7, 0.0, {0.2}), 3.3},
                        {4, 1, params(0.3, 0.5, {-0.4}), 17.0},
                        {2, 2, params(0.4, 0.0, {0.45, -0.15}), 9.5},
                        {4, 2, params(1.0, 3.0, {0.3, -0.6}), 5.25}};
  for (const Case& c : cases) {
    const SystemLayout l(c.big_n, c.m);
    ASSERT_LE(l.total_sites(), 8);
    for (auto policy : {SpectatorPolicy::Plus, SpectatorPolicy::Zero, SpectatorPolicy::HaarMean}) {
      ChannelOptions o;
      o.spectators = policy;
      o.haar_samples = 3;
      o.seed = 17;
      const Propagator prop(build_hamiltonian(l, c.p, channel_sectors(l, policy)), PropagatorOptions{});
      for (int v = 0; v < c.m; ++v) {
        const PairChannel ch = reconstruct_pair_channel(l, prop, o, static_cast<std::size_t>(v), c.t);
        PairChannel ref;
        for (auto& img : ref.images) img.setZero();
        const auto samples = spectator_samples(l, o, static_cast<std::size_t>(v));
        for (const SpectatorSample& s : samples) {
          const PairChannel one = oracle::channel(c.big_n, c.p, v, c.t, s.a, s.b);
          for (int i = 0; i < 16; ++i) ref.images[i] += one.images[i] / static_cast<double>(samples.size());
        }
        EXPECT_LT(max_diff(ch, ref), 1e-10) << "N=" << c.big_n << " M=" << c.m << " " << to_string(policy);
        const CptpReport r = check_cptp(ch);
        EXPECT_TRUE(r.ok(1e-10, 1e-10, -1e-9)) << r.choi_min_eigenvalue;
      }
    }
  }
}

TEST(Reconstruction, IdentityAtTimeZero) {
  const SystemLayout l(3, 2);
  const Propagator prop(build_hamiltonian(l, params(0.1, 0.0, {0.2, -0.2}), channel_sectors(l, SpectatorPolicy::Plus)),
                        PropagatorOptions{});
  const PairChannel ch = reconstruct_pair_channel(l, prop, ChannelOptions{}, 1, 0.0);
  EXPECT_LT(max_diff(ch, PairChannel::identity()), 1e-14);
}

TEST(Reconstruction, SweepVisitsEveryTimeAndPair) {
  const SystemLayout l(3, 2);
  const Propagator prop(build_hamiltonian(l, params(0.1, 0.0, {0.2, -0.2}), channel_sectors(l, SpectatorPolicy::Plus)),
                        PropagatorOptions{});
  const std::size_t pairs[] = {0, 1};
  const double times[] = {0.0, 1.5, 4.0};
  int visits = 0;
  sweep_pair_channels(l, prop, ChannelOptions{}, pairs, times, [&](std::size_t ti, std::span<const PairChannel> chs) {
    ASSERT_EQ(chs.size(), 2U);
    EXPECT_EQ(chs[1].pair, 1U);
    EXPECT_EQ(chs[0].time, times[ti]);
    const PairChannel direct = reconstruct_pair_channel(l, prop, ChannelOptions{}, 1, times[ti]);
    EXPECT_LT(max_diff(chs[1], direct), 1e-13);
    ++visits;
  });
  EXPECT_EQ(visits, 3);
  const std::size_t bad[] = {2};
  EXPECT_THROW(sweep_pair_channels(l, prop, ChannelOptions{}, bad, times, [](std::size_t, auto) {}), DomainError);
}

TEST(Reconstruction, PropagatorMustCoverSectors) {
  const SystemLayout l(3, 2);
  const Propagator prop(build_hamiltonian(l, params(0.1, 0.0, {0.2, -0.2}), channel_sectors(l, SpectatorPolicy::Zero)),
                        PropagatorOptions{});
  EXPECT_THROW(reconstruct_pair_channel(l, prop, ChannelOptions{}, 0, 1.0), DomainError);
}

TEST(Reconstruction, GlobalSwapAmplitudesMatchOracle) {
  const SystemLayout l(2, 2);
  const HamiltonianParams p = params(0.5, 0.0, {0.3, -0.3});
  const Propagator prop(build_hamiltonian(l, p, sector_range(l, 0, 4)), PropagatorOptions{});
  const double t = 2.75;
  const Eigen::MatrixXcd amps = global_swap_amplitudes(l, prop, t);
  const Eigen::MatrixXcd h = oracle::hamiltonian(2, 2, p);
  auto regs = [](std::size_t a, std::size_t b) {
    RegisterState r = RegisterState::all_ground(2);
    for (int v = 0; v < 2; ++v) {
      r.a[v] = QubitState::basis(static_cast<int>((a >> v) & 1U));
      r.b[v] = QubitState::basis(static_cast<int>((b >> v) & 1U));
    }
    return r;
  };
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      const Eigen::VectorXcd out = oracle::evolve(h, oracle::product_state(2, regs(a, b)), t);
      const Complex ref = oracle::product_state(2, regs(b, a)).dot(out);
      EXPECT_NEAR(std::abs(amps(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) - ref), 0.0, 1e-10);
    }
  }
}
