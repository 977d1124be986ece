#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spinbus/hamiltonian.hpp"
#include "spinbus/system.hpp"

namespace spinbus {

enum class PropagationMethod { Automatic, Spectral, Krylov };

struct PropagatorOptions {
  PropagationMethod method = PropagationMethod::Automatic;
  /// Automatic picks spectral up to this sector dimension, Krylov above.
  Eigen::Index spectral_max_dim = 4000;
  int krylov_dim = 30;
  /// Absolute error budget per Krylov substep (relative to the state norm).
  double krylov_tolerance = 1e-12;
  /// Krylov evolution always walks t = 0, a, 2a, ... and finishes with one
  /// partial step, so a given t is reached by the same arithmetic no matter
  /// which other times were requested.
  double anchor_step = 0.25;
};

/// Evolution operator exp(-iHt), prepared sector by sector.
class Propagator {
 public:
  using SweepVisitor = std::function<void(std::size_t time_index, std::span<const SectorState> states)>;

  Propagator(std::vector<SectorOperator> operators, PropagatorOptions options = {});

  const PropagatorOptions& options() const { return options_; }
  bool covers(int k) const { return blocks_.contains(k); }
  std::vector<int> sectors() const;
  PropagationMethod method(int k) const;
  const SectorOperator& sector_operator(int k) const;
  /// Cached spectrum of a spectral sector; throws for Krylov sectors.
  const Eigen::VectorXd& eigenvalues(int k) const;
  const Eigen::MatrixXd& eigenvectors(int k) const;

  /// |psi(t)> = exp(-iHt)|psi>; t >= 0.
  SectorState evolve(const SectorState& state, double t) const;

  /// Evolves every state through the non-decreasing `times`, calling `visit`
  /// once per time with all evolved states. Spectral sectors reuse the
  /// cached eigenbasis; Krylov sectors step along the anchor grid.
  void sweep(std::span<const SectorState> initial, std::span<const double> times, const SweepVisitor& visit) const;

  /// <psi|H|psi>.
  double energy(const SectorState& state) const;

 private:
  struct Block {
    SectorOperator op;
    PropagationMethod method = PropagationMethod::Spectral;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
  };

  const Block& block(int k) const;
  void check_covered(const SectorState& state) const;

  PropagatorOptions options_;
  std::map<int, Block> blocks_;
};

Propagator prepare_propagator(std::vector<SectorOperator> operators, PropagatorOptions options = {});

SectorState evolve(const Propagator& propagator, const SectorState& state, double t);

/// One Krylov (Lanczos) step v <- exp(-i H dt) v with adaptive substepping.
void krylov_step(const SparseMatrix& h, Eigen::VectorXcd& v, double dt, int krylov_dim, double tolerance);

/// Uniform grid [begin, end] with the given step (end included when it lands on the grid).
std::vector<double> time_grid(double begin, double end, double step);

}  // namespace spinbus
