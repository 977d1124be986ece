#pragma once

#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "spinbus/system.hpp"

namespace spinbus {

/// Couplings and fields of H = H_ch + H_I, all in absolute energy units.
///
/// Conventions: sigma^z|1> = +|1>, so a field h on an occupied site adds +h
/// to the diagonal and -h otherwise; an XX bond of strength c becomes a
/// hopping amplitude 2c between configurations differing by one swap.
struct HamiltonianParams {
  double J = 1.0;   ///< chain exchange coupling
  double J0 = 1.0;  ///< register-to-chain coupling
  double h0 = 0.0;  ///< field on both chain end sites
  std::vector<double> h;  ///< per-pair field, applied to A_v and B_v

  void validate(const SystemLayout& layout) const;
};

struct Bond {
  int first;
  int second;
  double coupling;
};

/// Bond list and per-site field vector for a layout.
struct Couplings {
  std::vector<Bond> bonds;
  std::vector<double> fields;
};

Couplings couplings(const SystemLayout& layout, const HamiltonianParams& params);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// H restricted to one excitation sector, indexed like SectorBasis.
struct SectorOperator {
  int excitation_count = 0;
  SparseMatrix matrix;

  Eigen::Index dimension() const { return matrix.rows(); }
};

SectorOperator build_sector_hamiltonian(const SystemLayout& layout, const HamiltonianParams& params,
                                        int excitation_count);

std::vector<SectorOperator> build_hamiltonian(const SystemLayout& layout, const HamiltonianParams& params,
                                              std::span<const int> sectors);

/// Sectors 0..max_excitations, clipped to the layout size.
std::vector<int> sector_range(const SystemLayout& layout, int min_excitations, int max_excitations);

}  // namespace spinbus
