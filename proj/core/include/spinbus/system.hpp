#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace spinbus {

using Complex = std::complex<double>;
/// Occupation bitstring; bit i set means site i holds an excitation |1>.
using Bits = std::uint64_t;

/// Site ordering of the register / data-bus system.
///
/// Sites are laid out as A_1 ... A_M, chain 1 ... N, B_M ... B_1, so that the
/// reflection site -> total_sites - 1 - site maps A_v onto B_v and chain site
/// i onto N + 1 - i. Pairs are addressed with 0-based indices throughout the
/// library; output files label them 1..M.
class SystemLayout {
 public:
  static constexpr int kMaxSites = 62;

  SystemLayout(int chain_length, int pair_count);

  int chain_length() const { return chain_length_; }
  int pair_count() const { return pair_count_; }
  int total_sites() const { return chain_length_ + 2 * pair_count_; }

  int register_a_site(std::size_t pair) const;
  int register_b_site(std::size_t pair) const;
  /// 0-based position along the chain (0 is the end touching register A).
  int chain_site(int position) const;
  bool is_register_site(int site) const;

  int mirror(int site) const { return total_sites() - 1 - site; }
  Bits mirror_bits(Bits bits) const;

  /// Bit mask selecting the two qubits of a pair.
  Bits pair_mask(std::size_t pair) const;
  Bits register_mask() const;
  Bits chain_mask() const;

  bool operator==(const SystemLayout&) const = default;

 private:
  int chain_length_;
  int pair_count_;
};

/// Validated constructor; rejects N < 2 or M < 1.
SystemLayout build_layout(int chain_length, int pair_count);

/// Binomial coefficient C(n, k) as an exact integer (0 when k is out of range).
std::uint64_t binomial(int n, int k);

/// Dense indexing of all occupation bitstrings with exactly k excitations.
/// States are enumerated in increasing numeric order, which coincides with
/// the colexicographic rank used by index().
class SectorBasis {
 public:
  SectorBasis(int sites, int excitation_count);

  int sites() const { return sites_; }
  int excitation_count() const { return excitation_count_; }
  std::size_t dimension() const { return states_.size(); }

  Bits state(std::size_t index) const { return states_[index]; }
  std::span<const Bits> states() const { return states_; }
  /// Inverse of state(); the argument must have exactly k set bits below `sites`.
  std::size_t index(Bits state) const;

 private:
  int sites_;
  int excitation_count_;
  std::vector<Bits> states_;
};

SectorBasis sector_basis(const SystemLayout& layout, int excitation_count);

/// Colexicographic rank of a bitstring among all bitstrings of equal weight.
std::size_t colex_rank(Bits state);

/// Single-qubit amplitudes c0|0> + c1|1>.
struct QubitState {
  Complex zero{1.0, 0.0};
  Complex one{0.0, 0.0};

  static QubitState ground() { return {}; }
  static QubitState excited() { return {{0.0, 0.0}, {1.0, 0.0}}; }
  static QubitState plus();
  static QubitState minus();
  static QubitState basis(int bit) { return bit ? excited() : ground(); }

  double norm_squared() const { return std::norm(zero) + std::norm(one); }
};

/// Product state of both registers; a[v] sits on A_v and b[v] on B_v.
struct RegisterState {
  std::vector<QubitState> a;
  std::vector<QubitState> b;

  static RegisterState all_ground(int pair_count);
};

/// Pure state stored sector by sector; only sectors with amplitude are kept.
class SectorState {
 public:
  explicit SectorState(SystemLayout layout) : layout_(layout) {}

  const SystemLayout& layout() const { return layout_; }

  const std::map<int, Eigen::VectorXcd>& sectors() const { return sectors_; }
  std::map<int, Eigen::VectorXcd>& sectors() { return sectors_; }

  bool has_sector(int k) const { return sectors_.contains(k); }
  const Eigen::VectorXcd& sector(int k) const;
  Eigen::VectorXcd& sector(int k) { return sectors_.at(k); }
  void set_sector(int k, Eigen::VectorXcd amplitudes);

  /// Amplitude of a single occupation bitstring (zero if its sector is absent).
  Complex amplitude(Bits state) const;

  double norm() const;
  /// <this|other>; sectors missing on either side contribute nothing.
  Complex inner(const SectorState& other) const;

 private:
  SystemLayout layout_;
  std::map<int, Eigen::VectorXcd> sectors_;
};

/// |psi_1..psi_M>_A |0..0>_ch |phi_1..phi_M>_B expanded over sectors.
SectorState encode_product_state(const SystemLayout& layout, const RegisterState& registers);

/// Tr over everything but pair v of |ket><bra|, in the basis
/// {|00>,|01>,|10>,|11>} of (A_v, B_v) with index 2*a + b.
Eigen::Matrix4cd partial_trace_pair(const SectorState& bra, const SectorState& ket,
                                    std::size_t pair);

/// Reusable gather tables for repeated pair partial traces.
///
/// Every basis state of a sector splits into (pair bits, rest bits); the rest
/// is ranked among bitstrings of the other n-2 sites, so a state turns into a
/// (rests x 4) amplitude table and traces become small matrix products.
class PairTracer {
 public:
  PairTracer(const SystemLayout& layout, std::size_t pair, std::span<const int> sectors);

  std::size_t pair() const { return pair_; }
  std::size_t rest_count() const { return rest_count_; }

  /// Scatters `state` into column block [4*slot, 4*slot+4) of `table`.
  void gather(const SectorState& state, Eigen::MatrixXcd& table, std::size_t slot) const;
  /// rho(p, p') = sum_r ket(r, p) * conj(bra(r, p')).
  Eigen::Matrix4cd trace(const SectorState& bra, const SectorState& ket) const;

  /// Rest id and pair configuration (2a + b) of every basis state of sector k.
  std::span<const std::uint32_t> rests(int k) const { return table(k).rest; }
  std::span<const std::uint8_t> configs(int k) const { return table(k).pair_config; }

 private:
  struct SectorTable {
    std::vector<std::uint32_t> rest;
    std::vector<std::uint8_t> pair_config;
  };

  SystemLayout layout_;
  std::size_t pair_;
  std::size_t rest_count_ = 0;
  std::map<int, SectorTable> tables_;

  const SectorTable& table(int k) const;
};

}  // namespace spinbus
