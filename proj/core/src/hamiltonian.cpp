#include "spinbus/hamiltonian.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "spinbus/errors.hpp"

namespace spinbus {

void HamiltonianParams::validate(const SystemLayout& layout) const {
  if (!(J > 0.0)) throw DomainError("J must be positive");
  if (h.size() != static_cast<std::size_t>(layout.pair_count())) {
    throw DomainError("expected " + std::to_string(layout.pair_count()) + " pair fields, got " +
                      std::to_string(h.size()));
  }
}

Couplings couplings(const SystemLayout& layout, const HamiltonianParams& params) {
  params.validate(layout);
  Couplings c;
  const int n_chain = layout.chain_length();
  const int first = layout.chain_site(0);
  const int last = layout.chain_site(n_chain - 1);
  for (int i = 0; i + 1 < n_chain; ++i) {
    c.bonds.push_back({layout.chain_site(i), layout.chain_site(i + 1), params.J});
  }
  for (int v = 0; v < layout.pair_count(); ++v) {
    c.bonds.push_back({layout.register_a_site(v), first, params.J0});
    c.bonds.push_back({last, layout.register_b_site(v), params.J0});
  }
  c.fields.assign(layout.total_sites(), 0.0);
  c.fields[first] += params.h0;
  c.fields[last] += params.h0;
  for (int v = 0; v < layout.pair_count(); ++v) {
    c.fields[layout.register_a_site(v)] += params.h[v];
    c.fields[layout.register_b_site(v)] += params.h[v];
  }
  return c;
}

SectorOperator build_sector_hamiltonian(const SystemLayout& layout, const HamiltonianParams& params,
                                        int excitation_count) {
  const Couplings c = couplings(layout, params);
  const SectorBasis basis = sector_basis(layout, excitation_count);
  const auto dim = static_cast<Eigen::Index>(basis.dimension());

  double field_sum = 0.0;
  for (double f : c.fields) field_sum += f;

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(basis.dimension() * (c.bonds.size() / 2 + 1));
  for (Eigen::Index row = 0; row < dim; ++row) {
    const Bits s = basis.state(static_cast<std::size_t>(row));
    // sum_i h_i z_i = 2 * sum_{occupied} h_i - sum_i h_i
    double diag = -field_sum;
    for (Bits rest = s; rest; rest &= rest - 1) diag += 2.0 * c.fields[std::countr_zero(rest)];
    if (diag != 0.0) entries.emplace_back(row, row, diag);
    for (const Bond& bond : c.bonds) {
      const bool a = (s >> bond.first) & 1U;
      const bool b = (s >> bond.second) & 1U;
      if (a == b || bond.coupling == 0.0) continue;
      const Bits t = s ^ (Bits{1} << bond.first) ^ (Bits{1} << bond.second);
      entries.emplace_back(row, static_cast<Eigen::Index>(basis.index(t)), 2.0 * bond.coupling);
    }
  }
  SectorOperator op;
  op.excitation_count = excitation_count;
  op.matrix.resize(dim, dim);
  op.matrix.setFromTriplets(entries.begin(), entries.end());
  op.matrix.makeCompressed();
  return op;
}

std::vector<SectorOperator> build_hamiltonian(const SystemLayout& layout, const HamiltonianParams& params,
                                              std::span<const int> sectors) {
  params.validate(layout);
  std::vector<SectorOperator> ops;
  ops.reserve(sectors.size());
  for (int k : sectors) {
    if (k < 0 || k > layout.total_sites()) {
      throw DomainError("sector " + std::to_string(k) + " outside [0, " + std::to_string(layout.total_sites()) + "]");
    }
    ops.push_back(build_sector_hamiltonian(layout, params, k));
  }
  return ops;
}

std::vector<int> sector_range(const SystemLayout& layout, int min_excitations, int max_excitations) {
  std::vector<int> out;
  for (int k = std::max(0, min_excitations); k <= std::min(max_excitations, layout.total_sites()); ++k) {
    out.push_back(k);
  }
  return out;
}

}  // namespace spinbus
