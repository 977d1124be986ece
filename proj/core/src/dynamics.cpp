#include "spinbus/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "spinbus/errors.hpp"
#include "spinbus/linalg.hpp"

namespace spinbus {

namespace {

Eigen::MatrixXcd real_times_complex(const Eigen::MatrixXd& a, const Eigen::MatrixXcd& b) {
  const Eigen::MatrixXd re = a * b.real();
  const Eigen::MatrixXd im = a * b.imag();
  Eigen::MatrixXcd out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

Eigen::MatrixXcd real_transpose_times_complex(const Eigen::MatrixXd& a, const Eigen::MatrixXcd& b) {
  const Eigen::MatrixXd re = a.transpose() * b.real();
  const Eigen::MatrixXd im = a.transpose() * b.imag();
  Eigen::MatrixXcd out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

// Splits t into (anchor index, remainder) with 0 <= remainder < anchor.
std::pair<long, double> split_on_anchors(double t, double anchor) {
  auto index = static_cast<long>(std::floor(t / anchor));
  if (t - static_cast<double>(index) * anchor < 0.0) --index;
  if (t - static_cast<double>(index + 1) * anchor >= 0.0) ++index;
  return {index, t - static_cast<double>(index) * anchor};
}

}  // namespace

void krylov_step(const SparseMatrix& h, Eigen::VectorXcd& v, double dt, int krylov_dim, double tolerance) {
  if (dt == 0.0) return;
  const Eigen::Index n = v.size();
  double remaining = dt;
  Eigen::MatrixXcd basis(n, std::max(1, krylov_dim));
  Eigen::VectorXcd w(n);

  while (remaining > 0.0) {
    const double norm = v.norm();
    if (norm == 0.0) return;
    const int m_max = static_cast<int>(std::min<Eigen::Index>(krylov_dim, n));
    Eigen::VectorXd alpha(m_max);
    Eigen::VectorXd beta(m_max);  // beta[j] couples basis j and j+1
    basis.col(0) = v / norm;
    int m = 0;
    double next_beta = 0.0;
    for (int j = 0; j < m_max; ++j) {
      multiply(h, basis.col(j), w);
      alpha[j] = basis.col(j).dot(w).real();
      // Full reorthogonalization against the basis built so far, applied twice.
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXcd c = basis.leftCols(j + 1).adjoint() * w;
        w.noalias() -= basis.leftCols(j + 1) * c;
      }
      m = j + 1;
      next_beta = w.norm();
      beta[j] = next_beta;
      if (next_beta <= 1e-13 * std::max(1.0, std::abs(alpha[j]))) {
        next_beta = 0.0;  // invariant subspace: the projection is exact
        break;
      }
      if (j + 1 < m_max) basis.col(j + 1) = w / next_beta;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    Eigen::VectorXd diag = alpha.head(m);
    Eigen::VectorXd sub = beta.head(std::max(0, m - 1));
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (tri.info() != Eigen::Success) throw NumericalError("Lanczos tridiagonal eigensolver failed");
    const Eigen::VectorXd first_row = tri.eigenvectors().row(0).transpose();

    double step = remaining;
    Eigen::VectorXcd y(m);
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXcd phased(m);
      for (int i = 0; i < m; ++i) phased[i] = std::polar(first_row[i], -tri.eigenvalues()[i] * step);
      y = tri.eigenvectors().cast<Complex>() * phased;
      const double error = norm * next_beta * std::abs(y[m - 1]);
      if (error <= tolerance * norm || next_beta == 0.0) break;
      if (attempt > 60) throw NumericalError("Krylov step failed to reach the requested tolerance");
      step *= 0.5;
    }
    v = norm * (basis.leftCols(m) * y);
    remaining -= step;
    if (remaining < 1e-15 * dt) remaining = 0.0;
  }
}

Propagator::Propagator(std::vector<SectorOperator> operators, PropagatorOptions options) : options_(options) {
  if (options_.anchor_step <= 0.0) throw DomainError("anchor step must be positive");
  if (options_.krylov_dim < 2) throw DomainError("Krylov dimension must be at least 2");
  for (SectorOperator& op : operators) {
    const int k = op.excitation_count;
    if (blocks_.contains(k)) throw DomainError("duplicate sector " + std::to_string(k));
    Block b;
    b.method = options_.method;
    if (b.method == PropagationMethod::Automatic) {
      b.method = op.dimension() <= options_.spectral_max_dim ? PropagationMethod::Spectral : PropagationMethod::Krylov;
    }
    if (b.method == PropagationMethod::Spectral) {
      try {
        SymmetricEigensystem eig = symmetric_eigensystem(Eigen::MatrixXd(op.matrix));
        b.eigenvalues = std::move(eig.values);
        b.eigenvectors = std::move(eig.vectors);
      } catch (const NumericalError& e) {
        throw NumericalError("diagonalization of sector " + std::to_string(k) + " failed: " + e.what());
      }
    }
    b.op = std::move(op);
    blocks_.emplace(k, std::move(b));
  }
}

std::vector<int> Propagator::sectors() const {
  std::vector<int> out;
  for (const auto& [k, b] : blocks_) out.push_back(k);
  return out;
}

const Propagator::Block& Propagator::block(int k) const {
  const auto it = blocks_.find(k);
  if (it == blocks_.end()) throw DomainError("propagator does not cover sector " + std::to_string(k));
  return it->second;
}

PropagationMethod Propagator::method(int k) const { return block(k).method; }

const SectorOperator& Propagator::sector_operator(int k) const { return block(k).op; }

const Eigen::VectorXd& Propagator::eigenvalues(int k) const {
  const Block& b = block(k);
  if (b.method != PropagationMethod::Spectral) throw DomainError("sector " + std::to_string(k) + " is not spectral");
  return b.eigenvalues;
}

const Eigen::MatrixXd& Propagator::eigenvectors(int k) const {
  const Block& b = block(k);
  if (b.method != PropagationMethod::Spectral) throw DomainError("sector " + std::to_string(k) + " is not spectral");
  return b.eigenvectors;
}

void Propagator::check_covered(const SectorState& state) const {
  for (const auto& [k, v] : state.sectors()) {
    const Block& b = block(k);
    if (v.size() != b.op.dimension()) throw DomainError("sector " + std::to_string(k) + " dimension mismatch");
  }
}

SectorState Propagator::evolve(const SectorState& state, double t) const {
  SectorState out = state;
  const double times[] = {t};
  sweep(std::span<const SectorState>(&state, 1), times,
        [&](std::size_t, std::span<const SectorState> states) { out = states[0]; });
  return out;
}

void Propagator::sweep(std::span<const SectorState> initial, std::span<const double> times,
                       const SweepVisitor& visit) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw DomainError("evolution times must be non-negative");
    if (i > 0 && times[i] < times[i - 1]) throw DomainError("sweep times must be non-decreasing");
  }
  for (const SectorState& s : initial) check_covered(s);

  struct SpectralWork {
    const Block* block;
    int k;
    std::vector<std::size_t> members;
    Eigen::MatrixXcd coefficients;
  };
  struct KrylovWork {
    const Block* block;
    int k;
    std::vector<std::size_t> members;
    std::vector<Eigen::VectorXcd> anchor;
    long anchor_index = 0;
  };
  std::vector<SpectralWork> spectral;
  std::vector<KrylovWork> krylov;
  for (const auto& [k, b] : blocks_) {
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < initial.size(); ++s) {
      if (initial[s].has_sector(k)) members.push_back(s);
    }
    if (members.empty()) continue;
    if (b.method == PropagationMethod::Spectral) {
      Eigen::MatrixXcd stacked(b.op.dimension(), static_cast<Eigen::Index>(members.size()));
      for (std::size_t j = 0; j < members.size(); ++j) stacked.col(j) = initial[members[j]].sector(k);
      spectral.push_back({&b, k, members, real_transpose_times_complex(b.eigenvectors, stacked)});
    } else {
      KrylovWork work{&b, k, members, {}, 0};
      for (std::size_t s : members) work.anchor.push_back(initial[s].sector(k));
      krylov.push_back(std::move(work));
    }
  }

  std::vector<SectorState> current(initial.begin(), initial.end());
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const double t = times[ti];
    for (SpectralWork& work : spectral) {
      Eigen::MatrixXcd phased = work.coefficients;
      for (Eigen::Index i = 0; i < phased.rows(); ++i) {
        phased.row(i) *= std::polar(1.0, -work.block->eigenvalues[i] * t);
      }
      const Eigen::MatrixXcd evolved = real_times_complex(work.block->eigenvectors, phased);
      for (std::size_t j = 0; j < work.members.size(); ++j) {
        current[work.members[j]].sector(work.k) = evolved.col(static_cast<Eigen::Index>(j));
      }
    }
    const auto [target_index, remainder] = split_on_anchors(t, options_.anchor_step);
    for (KrylovWork& work : krylov) {
      if (target_index < work.anchor_index) throw DomainError("sweep times must be non-decreasing");
      while (work.anchor_index < target_index) {
        for (Eigen::VectorXcd& v : work.anchor) {
          krylov_step(work.block->op.matrix, v, options_.anchor_step, options_.krylov_dim, options_.krylov_tolerance);
        }
        ++work.anchor_index;
      }
      for (std::size_t j = 0; j < work.members.size(); ++j) {
        Eigen::VectorXcd v = work.anchor[j];
        if (remainder > 0.0) {
          krylov_step(work.block->op.matrix, v, remainder, options_.krylov_dim, options_.krylov_tolerance);
        }
        current[work.members[j]].sector(work.k) = std::move(v);
      }
    }
    visit(ti, current);
  }
}

double Propagator::energy(const SectorState& state) const {
  check_covered(state);
  double e = 0.0;
  for (const auto& [k, v] : state.sectors()) {
    Eigen::VectorXcd hv(v.size());
    multiply(block(k).op.matrix, v, hv);
    e += v.dot(hv).real();
  }
  return e;
}

Propagator prepare_propagator(std::vector<SectorOperator> operators, PropagatorOptions options) {
  return Propagator(std::move(operators), options);
}

SectorState evolve(const Propagator& propagator, const SectorState& state, double t) {
  return propagator.evolve(state, t);
}

std::vector<double> time_grid(double begin, double end, double step) {
  if (!(step > 0.0)) throw DomainError("time step must be positive");
  if (end < begin) throw DomainError("time grid end precedes its start");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((end - begin) / step + 1e-9));
  out.reserve(static_cast<std::size_t>(count + 1));
  for (long i = 0; i <= count; ++i) out.push_back(begin + static_cast<double>(i) * step);
  return out;
}

}  // namespace spinbus
