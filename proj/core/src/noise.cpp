#include "spinbus/noise.hpp"

#include <bit>
#include <algorithm>
#include <cmath>
#include <string>

#include "spinbus/errors.hpp"
#include "spinbus/linalg.hpp"
#include "spinbus/parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace spinbus {

std::string to_string(LindbladIntegrator integrator) {
  return integrator == LindbladIntegrator::RK4 ? "rk4" : "krylov";
}

LindbladIntegrator parse_lindblad_integrator(const std::string& name) {
  if (name == "krylov") return LindbladIntegrator::Krylov;
  if (name == "rk4") return LindbladIntegrator::RK4;
  throw DomainError("unknown integrator '" + name + "' (expected krylov or rk4)");
}

void NoiseSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("dephasing rate must be non-negative");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrator step must be positive");
  if (!(krylov_step > 0.0) || !std::isfinite(krylov_step)) throw DomainError("Krylov step must be positive");
  if (krylov_dim < 2) throw DomainError("Krylov dimension must be at least 2");
  if (!(krylov_tolerance > 0.0)) throw DomainError("Krylov tolerance must be positive");
  if (!(trace_tolerance > 0.0)) throw DomainError("trace tolerance must be positive");
  if (max_halvings < 0) throw DomainError("max halvings must be non-negative");
}

Bits NoiseSpec::dephased_sites(const SystemLayout& layout) const {
  return include_registers ? layout.chain_mask() | layout.register_mask() : layout.chain_mask();
}

DensityState DensityState::outer(const SectorState& ket, const SectorState& bra) {
  if (!(ket.layout() == bra.layout())) throw DomainError("outer product across different layouts");
  DensityState out(ket.layout());
  for (const auto& [k, v] : ket.sectors()) {
    for (const auto& [kp, w] : bra.sectors()) out.blocks_.emplace(SectorPair{k, kp}, v * w.adjoint());
  }
  return out;
}

const Eigen::MatrixXcd& DensityState::block(int k, int kp) const {
  const auto it = blocks_.find({k, kp});
  if (it == blocks_.end()) throw DomainError("block (" + std::to_string(k) + ", " + std::to_string(kp) + ") is absent");
  return it->second;
}

void DensityState::set_block(int k, int kp, Eigen::MatrixXcd values) {
  const auto dk = static_cast<Eigen::Index>(binomial(layout_.total_sites(), k));
  const auto dkp = static_cast<Eigen::Index>(binomial(layout_.total_sites(), kp));
  if (values.rows() != dk || values.cols() != dkp) throw DomainError("density block has the wrong shape");
  blocks_[{k, kp}] = std::move(values);
}

Complex DensityState::trace() const {
  Complex t{};
  for (const auto& [key, b] : blocks_) {
    if (key.first == key.second) t += b.trace();
  }
  return t;
}

double DensityState::hermiticity_error() const {
  double err = 0.0;
  for (const auto& [key, b] : blocks_) {
    const auto it = blocks_.find({key.second, key.first});
    const double d = it == blocks_.end() ? b.cwiseAbs().maxCoeff() : (b - it->second.adjoint()).cwiseAbs().maxCoeff();
    err = std::max(err, d);
  }
  return err;
}

Complex DensityState::purity() const {
  Complex p{};
  for (const auto& [key, b] : blocks_) {
    const auto it = blocks_.find({key.second, key.first});
    if (it != blocks_.end()) p += (b.array() * it->second.transpose().array()).sum();
  }
  return p;
}

Complex DensityState::element(Bits row, Bits col) const {
  const int k = std::popcount(row);
  const int kp = std::popcount(col);
  const auto it = blocks_.find({k, kp});
  if (it == blocks_.end()) return {};
  const int n = layout_.total_sites();
  const auto i = static_cast<Eigen::Index>(colex_rank(row));
  const auto j = static_cast<Eigen::Index>(colex_rank(col));
  if ((row >> n) != 0 || (col >> n) != 0) throw DomainError("basis state outside the layout");
  return it->second(i, j);
}

Eigen::Matrix4cd partial_trace_pair(const DensityState& rho, const PairTracer& tracer) {
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  std::map<int, std::vector<long>> lookup;
  auto index_of = [&](int k) -> const std::vector<long>& {
    auto it = lookup.find(k);
    if (it != lookup.end()) return it->second;
    std::vector<long> table(tracer.rest_count() * 4, -1);
    const auto rests = tracer.rests(k);
    const auto configs = tracer.configs(k);
    for (std::size_t i = 0; i < rests.size(); ++i) table[rests[i] * 4 + configs[i]] = static_cast<long>(i);
    return lookup.emplace(k, std::move(table)).first->second;
  };
  for (const auto& [key, b] : rho.blocks()) {
    const auto rests = tracer.rests(key.first);
    const auto configs = tracer.configs(key.first);
    const std::vector<long>& cols = index_of(key.second);
    for (std::size_t i = 0; i < rests.size(); ++i) {
      for (int pp = 0; pp < 4; ++pp) {
        const long j = cols[rests[i] * 4 + pp];
        if (j >= 0) out(configs[i], pp) += b(static_cast<Eigen::Index>(i), j);
      }
    }
  }
  return out;
}

namespace {

// -2 * popcount((s ^ s') & sites) for every entry of block (k, k').
Eigen::MatrixXd dephasing_weights(const SystemLayout& layout, int k, int kp, Bits sites) {
  const SectorBasis rows(layout.total_sites(), k);
  const SectorBasis cols(layout.total_sites(), kp);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.dimension()), static_cast<Eigen::Index>(cols.dimension()));
  for (std::size_t j = 0; j < cols.dimension(); ++j) {
    for (std::size_t i = 0; i < rows.dimension(); ++i) {
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          -2.0 * std::popcount((rows.state(i) ^ cols.state(j)) & sites);
    }
  }
  return w;
}

Eigen::MatrixXcd left_real(const Eigen::MatrixXd& a, const Eigen::MatrixXcd& x) {
  Eigen::MatrixXcd out(a.rows(), x.cols());
  out.real() = a * x.real();
  out.imag() = a * x.imag();
  return out;
}

Eigen::MatrixXcd right_real(const Eigen::MatrixXcd& x, const Eigen::MatrixXd& a) {
  Eigen::MatrixXcd out(x.rows(), a.cols());
  out.real() = x.real() * a;
  out.imag() = x.imag() * a;
  return out;
}

// One block of the master equation in the eigenbases of H_k and H_k':
// sigma = V_k^T rho V_k', d sigma/dt = -i(E sigma - sigma E') + D(sigma).
class BlockIntegrator {
 public:
  BlockIntegrator(const Eigen::VectorXd& e_row, const Eigen::MatrixXd& v_row, const Eigen::VectorXd& e_col,
                  const Eigen::MatrixXd& v_col, Eigen::MatrixXd weights)
      : e_row_(e_row), v_row_(v_row), e_col_(e_col), v_col_(v_col), weights_(std::move(weights)) {}

  Eigen::MatrixXcd to_eigen(const Eigen::MatrixXcd& rho) const {
    return right_real(left_real(v_row_.transpose(), rho), v_col_);
  }
  Eigen::MatrixXcd from_eigen(const Eigen::MatrixXcd& sigma) const {
    return right_real(left_real(v_row_, sigma), v_col_.transpose());
  }

  // Integrates sigma over n steps of size h; returns false on trace drift.
  bool integrate(Eigen::MatrixXcd& sigma, double h, long n, bool diagonal, double tolerance) const {
    const Eigen::Index r = sigma.rows();
    const Eigen::Index c = sigma.cols();
    Eigen::MatrixXcd half(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) half(i, j) = std::polar(1.0, -(e_row_[i] - e_col_[j]) * h / 2.0);
    }
    const Eigen::MatrixXcd full = half.cwiseProduct(half);
    const bool dissipative = weights_.size() > 0 && weights_.cwiseAbs().maxCoeff() > 0.0;
    const Complex trace0 = diagonal ? sigma.trace() : Complex{};

    for (long step = 0; step < n; ++step) {
      if (!dissipative) {
        sigma = sigma.cwiseProduct(full);
        continue;
      }
      const Eigen::MatrixXcd k1 = rhs(sigma);
      const Eigen::MatrixXcd k2 = rhs(half.cwiseProduct(sigma + (h / 2.0) * k1));
      const Eigen::MatrixXcd k3 = rhs(half.cwiseProduct(sigma) + (h / 2.0) * k2);
      const Eigen::MatrixXcd k4 = rhs(full.cwiseProduct(sigma) + h * half.cwiseProduct(k3));
      sigma = full.cwiseProduct(sigma) +
              (h / 6.0) * (full.cwiseProduct(k1) + 2.0 * half.cwiseProduct(k2 + k3) + k4);
      if (diagonal && std::abs(sigma.trace() - trace0) > tolerance) return false;
      if (!sigma.allFinite()) return false;
    }
    return true;
  }

 private:
  Eigen::MatrixXcd rhs(const Eigen::MatrixXcd& sigma) const {
    return to_eigen(weights_.cwiseProduct(from_eigen(sigma)));
  }

  const Eigen::VectorXd& e_row_;
  const Eigen::MatrixXd& v_row_;
  const Eigen::VectorXd& e_col_;
  const Eigen::MatrixXd& v_col_;
  Eigen::MatrixXd weights_;
};

// d X/dt = -i(H_k X - X H_k') + W o X on one block, advanced with Arnoldi.
class BlockKrylov {
 public:
  BlockKrylov(const SparseMatrix& h_row, const SparseMatrix& h_col, Eigen::MatrixXd weights, int dim, double tolerance)
      : h_row_(h_row), h_col_(h_col), weights_(std::move(weights)), dim_(dim), tolerance_(tolerance) {
    // The scalar part of the generator is applied exactly.
    const double mean_row = h_row_.diagonal().mean();
    const double mean_col = h_col_.diagonal().mean();
    const double mean_w = weights_.size() > 0 ? weights_.mean() : 0.0;
    shift_ = Complex(mean_w, -(mean_row - mean_col));
  }

  void apply(const Eigen::MatrixXcd& x, Eigen::MatrixXcd& y) const {
    Eigen::MatrixXcd hx;
    Eigen::MatrixXcd xh;
    multiply(h_row_, x, hx);
    multiply_right_symmetric(x, h_col_, xh);
    y = Complex(0.0, -1.0) * (hx - xh) - shift_ * x;
    if (weights_.size() > 0) y += weights_.cwiseProduct(x);
  }

  // Advances x by dt. Substeps follow the a posteriori error estimate and the
  // accepted size carries over to the next call.
  void step(Eigen::MatrixXcd& x, double dt) {
    double remaining = dt;
    const auto size = x.size();
    const int m_max = static_cast<int>(std::min<Eigen::Index>(dim_, size));
    std::vector<Eigen::MatrixXcd> basis(static_cast<std::size_t>(m_max) + 1);
    Eigen::MatrixXcd w;
    if (substep_ <= 0.0) substep_ = dt;
    while (remaining > 0.0) {
      const double beta = x.norm();
      if (beta == 0.0) return;
      Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(m_max + 1, m_max);
      basis[0] = x / beta;
      int m = 0;
      double next = 0.0;
      for (int j = 0; j < m_max; ++j) {
        apply(basis[j], w);
        const double scale = w.norm();
        for (int pass = 0; pass < 2; ++pass) {
          for (int i = 0; i <= j; ++i) {
            const Complex c = (basis[i].conjugate().cwiseProduct(w)).sum();
            hess(i, j) += c;
            w -= c * basis[i];
          }
        }
        m = j + 1;
        next = w.norm();
        hess(j + 1, j) = next;
        if (next <= 1e-13 * std::max(1.0, scale)) {
          next = 0.0;
          break;
        }
        basis[j + 1] = w / next;
      }
      double h = std::min(substep_, remaining);
      Eigen::VectorXcd y;
      double err = 0.0;
      for (int attempt = 0;; ++attempt) {
        const Eigen::MatrixXcd e = (h * hess.topLeftCorner(m, m)).exp();
        y = e.col(0);
        err = next == 0.0 ? 0.0 : next * std::abs(y[m - 1]);
        if (err <= tolerance_) break;
        if (attempt > 60) throw NumericalError("Arnoldi step failed to reach the requested tolerance");
        h *= std::clamp(0.9 * std::pow(tolerance_ / err, 1.0 / m), 0.1, 0.5);
      }
      x = (beta * y[0]) * basis[0];
      for (int i = 1; i < m; ++i) x += (beta * y[i]) * basis[i];
      x *= std::exp(shift_ * h);
      const double grow = err == 0.0 ? 2.0 : std::clamp(0.9 * std::pow(tolerance_ / err, 1.0 / m), 0.5, 2.0);
      if (h < remaining || grow < 1.0) substep_ = h * grow;
      remaining -= h;
      if (remaining < 1e-15 * dt) remaining = 0.0;
    }
  }

 private:
  const SparseMatrix& h_row_;
  const SparseMatrix& h_col_;
  Eigen::MatrixXd weights_;
  int dim_;
  double tolerance_;
  Complex shift_;
  double substep_ = 0.0;
};

}  // namespace

DensityState lindblad_rhs(const DensityState& rho, std::span<const SectorOperator> hamiltonian, double gamma,
                          Bits sites) {
  if (!(gamma >= 0.0)) throw DomainError("dephasing rate must be non-negative");
  std::map<int, const SectorOperator*> ops;
  for (const SectorOperator& op : hamiltonian) ops[op.excitation_count] = &op;
  auto op_for = [&](int k) -> const SectorOperator& {
    const auto it = ops.find(k);
    if (it == ops.end()) throw DomainError("Hamiltonian lacks sector " + std::to_string(k));
    return *it->second;
  };
  DensityState out(rho.layout());
  for (const auto& [key, b] : rho.blocks()) {
    Eigen::MatrixXcd hb;
    Eigen::MatrixXcd bh;
    multiply(op_for(key.first).matrix, b, hb);
    multiply_right_symmetric(b, op_for(key.second).matrix, bh);
    Eigen::MatrixXcd d = Complex(0.0, -1.0) * (hb - bh);
    if (gamma > 0.0) {
      d += gamma * dephasing_weights(rho.layout(), key.first, key.second, sites).cwiseProduct(b);
    }
    out.blocks().emplace(key, std::move(d));
  }
  return out;
}

DensityState evolve_lindblad(const DensityState& rho0, const Propagator& propagator, const NoiseSpec& spec, double t) {
  spec.validate();
  if (!(t >= 0.0)) throw DomainError("evolution time must be non-negative");
  const Bits sites = spec.dephased_sites(rho0.layout());
  DensityState out(rho0.layout());
  for (const auto& [key, b] : rho0.blocks()) {
    const auto [k, kp] = key;
    if (!propagator.covers(k) || !propagator.covers(kp)) {
      throw DomainError("propagator does not cover block (" + std::to_string(k) + ", " + std::to_string(kp) + ")");
    }
    Eigen::MatrixXd weights;
    if (spec.gamma > 0.0) weights = spec.gamma * dephasing_weights(rho0.layout(), k, kp, sites);
    const bool diagonal = k == kp;
    const Complex trace0 = diagonal ? b.trace() : Complex{};

    if (spec.integrator == LindbladIntegrator::Krylov) {
      BlockKrylov krylov(propagator.sector_operator(k).matrix, propagator.sector_operator(kp).matrix,
                               std::move(weights), spec.krylov_dim, spec.krylov_tolerance);
      double step = spec.krylov_step;
      Eigen::MatrixXcd x;
      for (int halving = 0;; ++halving) {
        const long n = t == 0.0 ? 0 : static_cast<long>(std::ceil(t / step - 1e-9));
        x = b;
        bool ok = true;
        for (long i = 0; i < n && ok; ++i) {
          krylov.step(x, t / static_cast<double>(n));
          ok = x.allFinite() && (!diagonal || std::abs(x.trace() - trace0) <= spec.trace_tolerance);
        }
        if (ok) break;
        if (halving >= spec.max_halvings) {
          throw NumericalError("dephasing integrator drifted with step " + std::to_string(step) +
                               "; retry with a smaller step");
        }
        step /= 2.0;
      }
      out.blocks().emplace(key, std::move(x));
      continue;
    }

    if (propagator.method(k) != PropagationMethod::Spectral || propagator.method(kp) != PropagationMethod::Spectral) {
      throw DomainError("the RK4 dephasing integrator needs spectral sectors");
    }
    const BlockIntegrator integrator(propagator.eigenvalues(k), propagator.eigenvectors(k), propagator.eigenvalues(kp),
                                     propagator.eigenvectors(kp), std::move(weights));
    const Eigen::MatrixXcd sigma0 = integrator.to_eigen(b);
    double dt = spec.dt;
    Eigen::MatrixXcd sigma;
    for (int halving = 0;; ++halving) {
      const long n = t == 0.0 ? 0 : static_cast<long>(std::ceil(t / dt - 1e-9));
      sigma = sigma0;
      if (integrator.integrate(sigma, n == 0 ? 0.0 : t / static_cast<double>(n), n, diagonal, spec.trace_tolerance)) {
        break;
      }
      if (halving >= spec.max_halvings) {
        throw NumericalError("dephasing integrator drifted with dt = " + std::to_string(dt) +
                             "; retry with a smaller dt");
      }
      dt /= 2.0;
    }
    out.blocks().emplace(key, integrator.from_eigen(sigma));
  }
  return out;
}

std::vector<PairChannel> noisy_pair_channels(const SystemLayout& layout, const HamiltonianParams& params, double tau,
                                             const NoiseSpec& spec, const ChannelOptions& options, int workers) {
  spec.validate();
  params.validate(layout);
  if (!(tau >= 0.0)) throw DomainError("tau must be non-negative");
  PropagatorOptions popts;
  if (spec.integrator == LindbladIntegrator::RK4) popts.method = PropagationMethod::Spectral;
  const std::vector<int> sectors = channel_sectors(layout, options.spectators);
  const Propagator prop(build_hamiltonian(layout, params, sectors), popts);

  NoiseSpec absolute = spec;
  absolute.gamma = spec.gamma * params.J;
  absolute.dt = spec.dt / params.J;
  absolute.krylov_step = spec.krylov_step / params.J;
  const double t = tau / params.J;

  struct Job {
    std::size_t pair;
    std::size_t sample;
    int j;
    int jp;
  };
  const auto m = static_cast<std::size_t>(layout.pair_count());
  std::vector<std::vector<SpectatorSample>> samples(m);
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < m; ++p) {
    samples[p] = spectator_samples(layout, options, p);
    for (std::size_t s = 0; s < samples[p].size(); ++s) {
      for (int j = 0; j < 4; ++j) {
        for (int jp = j; jp < 4; ++jp) jobs.push_back({p, s, j, jp});
      }
    }
  }
  std::vector<PairTracer> tracers;
  for (std::size_t p = 0; p < m; ++p) tracers.emplace_back(layout, p, sectors);

  std::vector<Eigen::Matrix4cd> images(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    const SpectatorSample& spec_sample = samples[job.pair][job.sample];
    const SectorState ket = encode_product_state(layout, pair_input_state(layout, job.pair, job.j, spec_sample.a, spec_sample.b));
    const SectorState bra = encode_product_state(layout, pair_input_state(layout, job.pair, job.jp, spec_sample.a, spec_sample.b));
    const DensityState rho = evolve_lindblad(DensityState::outer(ket, bra), prop, absolute, t);
    images[i] = partial_trace_pair(rho, tracers[job.pair]);
  });

  std::vector<PairChannel> channels(m);
  for (std::size_t p = 0; p < m; ++p) {
    channels[p].pair = p;
    channels[p].time = tau;
    channels[p].spectators = options.spectators;
    for (auto& img : channels[p].images) img.setZero();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    const double weight = 1.0 / static_cast<double>(samples[job.pair].size());
    PairChannel& ch = channels[job.pair];
    ch.image(job.j, job.jp) += weight * images[i];
    if (job.j != job.jp) ch.image(job.jp, job.j) += weight * images[i].adjoint();
  }
  return channels;
}

FidelityReport noisy_mean_fidelity(const SystemLayout& layout, const HamiltonianParams& params, double tau,
                                   const NoiseSpec& spec, const EvaluationOptions& options, int workers) {
  const std::vector<PairChannel> noisy = noisy_pair_channels(layout, params, tau, spec, options.channel, workers);
  std::vector<GateTarget> targets;
  if (options.target == TargetKind::Ideal) {
    targets.assign(noisy.size(), ideal_phases(layout.chain_length()));
  } else {
    const std::vector<int> sectors = channel_sectors(layout, options.channel.spectators);
    const Propagator prop(build_hamiltonian(layout, params, sectors), options.propagator);
    std::vector<std::size_t> pairs(noisy.size());
    for (std::size_t v = 0; v < pairs.size(); ++v) pairs[v] = v;
    const double times[] = {tau / params.J};
    sweep_pair_channels(layout, prop, options.channel, pairs, times,
                        [&](std::size_t, std::span<const PairChannel> clean) {
                          for (const PairChannel& ch : clean) targets.push_back(calibrate_phases_unchecked(ch).target);
                        });
  }
  FidelityReport report = mean_fidelity(noisy, targets);
  report.time = tau;
  return report;
}

}  // namespace spinbus
