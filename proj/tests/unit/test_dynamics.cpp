#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dense_oracle.hpp"
#include "spinbus/dynamics.hpp"
#include "spinbus/errors.hpp"
#include "spinbus/linalg.hpp"

using namespace spinbus;

namespace {

HamiltonianParams params(double j0, double h0, std::vector<double> h) {
  HamiltonianParams p;
  p.J0 = j0;
  p.h0 = h0;
  p.h = std::move(h);
  return p;
}

SectorState random_state(const SystemLayout& l, std::span<const int> sectors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  SectorState s(l);
  double norm = 0.0;
  for (int k : sectors) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(binomial(l.total_sites(), k)));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(g(rng), g(rng));
    norm += v.squaredNorm();
    s.set_sector(k, v);
  }
  for (auto& [k, v] : s.sectors()) v /= std::sqrt(norm);
  return s;
}

double distance(const SectorState& a, const SectorState& b) {
  return (oracle::to_dense(a) - oracle::to_dense(b)).cwiseAbs().maxCoeff();
}

PropagatorOptions with_method(PropagationMethod m) {
  PropagatorOptions o;
  o.method = m;
  return o;
}

}  // namespace

TEST(Eigensystem, SmallBlocks) {
  Eigen::MatrixXd one(1, 1);
  one << 3.5;
  EXPECT_DOUBLE_EQ(symmetric_eigensystem(one).values[0], 3.5);
  Eigen::MatrixXd two(2, 2);
  two << 0, 2, 2, 0;
  const SymmetricEigensystem e = symmetric_eigensystem(two);
  EXPECT_NEAR(e.values[0], -2.0, 1e-14);
  EXPECT_NEAR(e.values[1], 2.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(e.vectors(0, 1) * e.vectors(1, 1), 0.5, 1e-14);
}

TEST(Eigensystem, BackendsAgreeOnLargeMatrix) {
  // Large enough to exercise blocked LAPACK paths.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(300, 300);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  a = (a + a.transpose()).eval();
  for (EigenBackend b : {EigenBackend::Lapack, EigenBackend::Eigen}) {
    const SymmetricEigensystem e = symmetric_eigensystem(a, b);
    EXPECT_LT((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(300, 300)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Propagator, VacuumPhase) {
  const SystemLayout l(3, 1);
  const int k0[] = {0};
  const Propagator prop(build_hamiltonian(l, params(0.5, 2.0, {0.3}), k0));
  const double d = -(2 * 2.0 + 2 * 0.3);
  EXPECT_NEAR(prop.eigenvalues(0)[0], d, 1e-14);
  const SectorState vac = encode_product_state(l, RegisterState::all_ground(1));
  const SectorState out = prop.evolve(vac, 1.7);
  EXPECT_NEAR(std::abs(out.sector(0)[0] - std::polar(1.0, -d * 1.7)), 0.0, 1e-13);
}

TEST(Propagator, IdentityAtZero) {
  const SystemLayout l(4, 2);
  const auto sectors = sector_range(l, 0, 4);
  for (PropagationMethod m : {PropagationMethod::Spectral, PropagationMethod::Krylov}) {
    const Propagator prop(build_hamiltonian(l, params(0.3, 0.0, {0.2, -0.4}), sectors), with_method(m));
    const SectorState s = random_state(l, sectors, 5);
    EXPECT_LT(distance(prop.evolve(s, 0.0), s), 1e-12);
  }
}

TEST(Propagator, RabiOscillation) {
  // Uniform 4-site chain; hopping 2J between A1 and the first chain site. With
  // J0 = J and N = 2 the single-excitation problem is a 4-site chain, so check
  // the two-site formula on a chain where the pair is isolated instead:
  // J = 1, J0 small, look at the dense oracle for the 4-site chain.
  const SystemLayout l(2, 1);
  const HamiltonianParams p = params(1.0, 0.0, {0.0});
  const int k1[] = {1};
  const Propagator prop(build_hamiltonian(l, p, k1));
  RegisterState r = RegisterState::all_ground(1);
  r.a[0] = QubitState::excited();
  const SectorState s = encode_product_state(l, r);
  const Eigen::MatrixXcd h = oracle::hamiltonian(2, 1, p);
  for (double t : {0.1, 0.77, 3.0}) {
    const Eigen::VectorXcd ref = oracle::evolve(h, oracle::to_dense(s), t);
    EXPECT_LT((oracle::to_dense(prop.evolve(s, t)) - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Propagator, TwoSiteRabiFormula) {
  // Two sites exchanging one excitation with amplitude 2J: P(t) = sin^2(2Jt).
  SparseMatrix h(2, 2);
  h.insert(0, 1) = 2.0;
  h.insert(1, 0) = 2.0;
  h.makeCompressed();
  for (double t : {0.2, 0.5, 1.3}) {
    Eigen::VectorXcd v(2);
    v << 1.0, 0.0;
    krylov_step(h, v, t, 2, 1e-13);
    EXPECT_NEAR(std::norm(v[1]), std::pow(std::sin(2.0 * t), 2), 1e-12);
  }
}

TEST(Propagator, MatchesDenseOracle) {
  const SystemLayout l(3, 2);
  const HamiltonianParams p = params(0.2, 1.0, {0.35, -0.25});
  const auto sectors = sector_range(l, 0, l.total_sites());
  const Eigen::MatrixXcd h = oracle::hamiltonian(3, 2, p);
  const SectorState s = random_state(l, sectors, 17);
  for (PropagationMethod m : {PropagationMethod::Spectral, PropagationMethod::Krylov}) {
    const Propagator prop(build_hamiltonian(l, p, sectors), with_method(m));
    for (double t : {0.3, 4.1, 25.0}) {
      const Eigen::VectorXcd ref = oracle::evolve(h, oracle::to_dense(s), t);
      EXPECT_LT((oracle::to_dense(prop.evolve(s, t)) - ref).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(Propagator, KrylovAgreesWithSpectralOnLargerSector) {
  // N=20, M=2 at k = 3 (dim 2024) keeps the spectral reference affordable;
  // k = 4 (dim 10626) is left to the Krylov path in production.
  const SystemLayout l(20, 2);
  const HamiltonianParams p = params(0.04, 0.0, {0.35, -0.25});
  const int k3[] = {3};
  const SectorState s = random_state(l, k3, 23);
  const Propagator spectral(build_hamiltonian(l, p, k3), with_method(PropagationMethod::Spectral));
  const Propagator krylov(build_hamiltonian(l, p, k3), with_method(PropagationMethod::Krylov));
  for (double t : {0.25, 3.3, 40.0}) {
    const Eigen::VectorXcd a = spectral.evolve(s, t).sector(3);
    const Eigen::VectorXcd b = krylov.evolve(s, t).sector(3);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8) << "t = " << t;
  }
}

TEST(Propagator, NormEnergyAndSectorsConserved) {
  const SystemLayout l(4, 2);
  const HamiltonianParams p = params(0.04, 0.0, {0.45, -0.15});
  const auto sectors = sector_range(l, 0, 4);
  const int populated[] = {1, 3};
  const SectorState s = random_state(l, populated, 29);
  for (PropagationMethod m : {PropagationMethod::Spectral, PropagationMethod::Krylov}) {
    const Propagator prop(build_hamiltonian(l, p, sectors), with_method(m));
    const double e0 = prop.energy(s);
    const SectorState init[] = {s};
    const auto times = time_grid(0.0, 60.0, 0.25);
    prop.sweep(init, times, [&](std::size_t, std::span<const SectorState> states) {
      EXPECT_NEAR(states[0].norm(), 1.0, 1e-10);
      EXPECT_NEAR(prop.energy(states[0]), e0, 1e-9 * std::max(1.0, std::abs(e0)));
      EXPECT_EQ(states[0].sectors().size(), 2U);
    });
  }
}

TEST(Propagator, Composition) {
  const SystemLayout l(4, 1);
  const HamiltonianParams p = params(0.3, 2.0, {0.1});
  const auto sectors = sector_range(l, 0, 6);
  const SectorState s = random_state(l, sectors, 31);
  for (PropagationMethod m : {PropagationMethod::Spectral, PropagationMethod::Krylov}) {
    const Propagator prop(build_hamiltonian(l, p, sectors), with_method(m));
    EXPECT_LT(distance(prop.evolve(prop.evolve(s, 1.3), 2.45), prop.evolve(s, 3.75)), 1e-9);
  }
}

TEST(Propagator, SweepMatchesIndividualEvolutionBitwiseForKrylov) {
  const SystemLayout l(5, 1);
  const HamiltonianParams p = params(0.1, 0.0, {0.2});
  const auto sectors = sector_range(l, 0, 2);
  const Propagator prop(build_hamiltonian(l, p, sectors), with_method(PropagationMethod::Krylov));
  const SectorState s = random_state(l, sectors, 37);
  const double times[] = {0.0, 0.3, 1.0, 7.6};
  const SectorState init[] = {s};
  prop.sweep(init, times, [&](std::size_t i, std::span<const SectorState> states) {
    const SectorState single = prop.evolve(s, times[i]);
    for (const auto& [k, v] : single.sectors()) EXPECT_EQ(v, states[0].sector(k));
  });
}

TEST(Propagator, Errors) {
  const SystemLayout l(3, 1);
  const int k1[] = {1};
  const Propagator prop(build_hamiltonian(l, params(0.5, 0.0, {0.0}), k1));
  RegisterState r = RegisterState::all_ground(1);
  const SectorState vac = encode_product_state(l, r);
  EXPECT_THROW(prop.evolve(vac, 1.0), DomainError);
  r.a[0] = QubitState::excited();
  const SectorState one = encode_product_state(l, r);
  EXPECT_THROW(prop.evolve(one, -1.0), DomainError);
  const SectorState init[] = {one};
  const double backwards[] = {2.0, 1.0};
  EXPECT_THROW(prop.sweep(init, backwards, [](std::size_t, std::span<const SectorState>) {}), DomainError);
  EXPECT_THROW(prop.eigenvalues(0), DomainError);
  const Propagator kry(build_hamiltonian(l, params(0.5, 0.0, {0.0}), k1),
                       with_method(PropagationMethod::Krylov));
  EXPECT_THROW(kry.eigenvectors(1), DomainError);
  std::vector<SectorOperator> dup = build_hamiltonian(l, params(0.5, 0.0, {0.0}), k1);
  dup.push_back(dup.front());
  EXPECT_THROW(Propagator{dup}, DomainError);
}

TEST(Propagator, AutomaticSelection) {
  const SystemLayout l(6, 2);
  PropagatorOptions o;
  o.spectral_max_dim = 50;
  const Propagator prop(build_hamiltonian(l, params(0.04, 0.0, {0.1, -0.1}), sector_range(l, 0, 3)), o);
  EXPECT_EQ(prop.method(1), PropagationMethod::Spectral);   // dim 10
  EXPECT_EQ(prop.method(2), PropagationMethod::Spectral);   // dim 45
  EXPECT_EQ(prop.method(3), PropagationMethod::Krylov);     // dim 120
}

TEST(TimeGrid, InclusiveEnd) {
  const auto g = time_grid(1.0, 500.0, 0.25);
  EXPECT_EQ(g.size(), 1997U);
  EXPECT_DOUBLE_EQ(g.back(), 500.0);
  EXPECT_THROW(time_grid(0.0, 1.0, 0.0), DomainError);
  EXPECT_THROW(time_grid(2.0, 1.0, 0.1), DomainError);
}
