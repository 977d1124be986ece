#include "spinbus/system.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "spinbus/errors.hpp"

namespace spinbus {

namespace {

constexpr int kTableSize = 64;

struct BinomialTable {
  std::array<std::array<std::uint64_t, kTableSize>, kTableSize> c{};
  BinomialTable() {
    for (int n = 0; n < kTableSize; ++n) {
      c[n][0] = 1;
      for (int k = 1; k <= n; ++k) c[n][k] = c[n - 1][k - 1] + (k <= n - 1 ? c[n - 1][k] : 0);
    }
  }
};

const BinomialTable& binomials() {
  static const BinomialTable table;
  return table;
}

// Removes two bit positions (lo < hi) and closes the gaps.
Bits squeeze_out(Bits bits, int lo, int hi) {
  const Bits below_lo = bits & ((Bits{1} << lo) - 1);
  const Bits between = (bits >> (lo + 1)) & ((Bits{1} << (hi - lo - 1)) - 1);
  const Bits above = bits >> (hi + 1);
  return below_lo | (between << lo) | (above << (hi - 1));
}

}  // namespace

SystemLayout::SystemLayout(int chain_length, int pair_count)
    : chain_length_(chain_length), pair_count_(pair_count) {
  if (chain_length < 2) throw DomainError("chain length must be at least 2, got " + std::to_string(chain_length));
  if (pair_count < 1) throw DomainError("pair count must be at least 1, got " + std::to_string(pair_count));
  if (total_sites() > kMaxSites) throw DomainError("layout exceeds " + std::to_string(kMaxSites) + " sites");
}

int SystemLayout::register_a_site(std::size_t pair) const {
  if (pair >= static_cast<std::size_t>(pair_count_)) throw DomainError("pair index out of range");
  return static_cast<int>(pair);
}

int SystemLayout::register_b_site(std::size_t pair) const {
  return mirror(register_a_site(pair));
}

int SystemLayout::chain_site(int position) const {
  if (position < 0 || position >= chain_length_) throw DomainError("chain position out of range");
  return pair_count_ + position;
}

bool SystemLayout::is_register_site(int site) const {
  return site < pair_count_ || site >= pair_count_ + chain_length_;
}

Bits SystemLayout::mirror_bits(Bits bits) const {
  Bits out = 0;
  while (bits) {
    const int site = std::countr_zero(bits);
    out |= Bits{1} << mirror(site);
    bits &= bits - 1;
  }
  return out;
}

Bits SystemLayout::pair_mask(std::size_t pair) const {
  return (Bits{1} << register_a_site(pair)) | (Bits{1} << register_b_site(pair));
}

Bits SystemLayout::register_mask() const {
  return ((Bits{1} << total_sites()) - 1) & ~chain_mask();
}

Bits SystemLayout::chain_mask() const {
  return ((Bits{1} << chain_length_) - 1) << pair_count_;
}

SystemLayout build_layout(int chain_length, int pair_count) {
  return SystemLayout(chain_length, pair_count);
}

std::uint64_t binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n || n >= kTableSize) return 0;
  return binomials().c[n][k];
}

std::size_t colex_rank(Bits state) {
  std::size_t rank = 0;
  int i = 1;
  while (state) {
    const int pos = std::countr_zero(state);
    rank += binomial(pos, i);
    ++i;
    state &= state - 1;
  }
  return rank;
}

SectorBasis::SectorBasis(int sites, int excitation_count)
    : sites_(sites), excitation_count_(excitation_count) {
  if (sites < 1 || sites > SystemLayout::kMaxSites) throw DomainError("invalid site count");
  if (excitation_count < 0 || excitation_count > sites) {
    throw DomainError("excitation count " + std::to_string(excitation_count) + " outside [0, " +
                      std::to_string(sites) + "]");
  }
  const std::uint64_t dim = binomial(sites, excitation_count);
  states_.reserve(dim);
  if (excitation_count == 0) {
    states_.push_back(0);
    return;
  }
  // Gosper's hack walks weight-k integers in increasing order.
  Bits v = (Bits{1} << excitation_count) - 1;
  for (std::uint64_t i = 0; i < dim; ++i) {
    states_.push_back(v);
    const Bits t = v | (v - 1);
    v = (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
  }
}

std::size_t SectorBasis::index(Bits state) const {
  if (std::popcount(state) != excitation_count_ || (sites_ < 64 && (state >> sites_) != 0)) {
    throw DomainError("bitstring does not belong to sector " + std::to_string(excitation_count_));
  }
  return colex_rank(state);
}

SectorBasis sector_basis(const SystemLayout& layout, int excitation_count) {
  return SectorBasis(layout.total_sites(), excitation_count);
}

QubitState QubitState::plus() {
  const double s = 1.0 / std::sqrt(2.0);
  return {{s, 0.0}, {s, 0.0}};
}

QubitState QubitState::minus() {
  const double s = 1.0 / std::sqrt(2.0);
  return {{s, 0.0}, {-s, 0.0}};
}

RegisterState RegisterState::all_ground(int pair_count) {
  return {std::vector<QubitState>(pair_count), std::vector<QubitState>(pair_count)};
}

const Eigen::VectorXcd& SectorState::sector(int k) const {
  const auto it = sectors_.find(k);
  if (it == sectors_.end()) throw DomainError("sector " + std::to_string(k) + " not populated");
  return it->second;
}

void SectorState::set_sector(int k, Eigen::VectorXcd amplitudes) {
  if (k < 0 || k > layout_.total_sites()) throw DomainError("sector out of range");
  if (static_cast<std::uint64_t>(amplitudes.size()) != binomial(layout_.total_sites(), k)) {
    throw DomainError("sector " + std::to_string(k) + " amplitude vector has wrong length");
  }
  sectors_[k] = std::move(amplitudes);
}

Complex SectorState::amplitude(Bits state) const {
  const auto it = sectors_.find(std::popcount(state));
  if (it == sectors_.end()) return {};
  return it->second[static_cast<Eigen::Index>(colex_rank(state))];
}

double SectorState::norm() const {
  double sum = 0.0;
  for (const auto& [k, v] : sectors_) sum += v.squaredNorm();
  return std::sqrt(sum);
}

Complex SectorState::inner(const SectorState& other) const {
  if (!(layout_ == other.layout_)) throw DomainError("inner product across different layouts");
  Complex sum{};
  for (const auto& [k, v] : sectors_) {
    const auto it = other.sectors_.find(k);
    if (it != other.sectors_.end()) sum += v.dot(it->second);
  }
  return sum;
}

SectorState encode_product_state(const SystemLayout& layout, const RegisterState& registers) {
  const int m = layout.pair_count();
  if (registers.a.size() != static_cast<std::size_t>(m) || registers.b.size() != static_cast<std::size_t>(m)) {
    throw DomainError("register state must hold one qubit per pair on each side");
  }
  // Register qubits in site order; product amplitudes expand over 2^(2M) configurations.
  std::vector<std::pair<int, QubitState>> qubits;
  for (int v = 0; v < m; ++v) qubits.emplace_back(layout.register_a_site(v), registers.a[v]);
  for (int v = 0; v < m; ++v) qubits.emplace_back(layout.register_b_site(v), registers.b[v]);
  for (const auto& [site, q] : qubits) {
    if (std::abs(q.norm_squared() - 1.0) > 1e-10) {
      throw DomainError("register qubit on site " + std::to_string(site) + " is not normalized");
    }
  }

  SectorState state(layout);
  const std::size_t configs = std::size_t{1} << qubits.size();
  for (std::size_t c = 0; c < configs; ++c) {
    Complex amp{1.0, 0.0};
    Bits bits = 0;
    for (std::size_t q = 0; q < qubits.size(); ++q) {
      const bool up = (c >> q) & 1U;
      amp *= up ? qubits[q].second.one : qubits[q].second.zero;
      if (up) bits |= Bits{1} << qubits[q].first;
    }
    if (amp == Complex{}) continue;
    const int k = std::popcount(bits);
    auto it = state.sectors().find(k);
    if (it == state.sectors().end()) {
      it = state.sectors()
               .emplace(k, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(binomial(layout.total_sites(), k))))
               .first;
    }
    it->second[static_cast<Eigen::Index>(colex_rank(bits))] += amp;
  }
  return state;
}

PairTracer::PairTracer(const SystemLayout& layout, std::size_t pair, std::span<const int> sectors)
    : layout_(layout), pair_(pair) {
  const int n = layout.total_sites();
  const int lo = layout.register_a_site(pair);
  const int hi = layout.register_b_site(pair);
  const Bits mask = layout.pair_mask(pair);

  int min_rest = n;
  int max_rest = -1;
  for (int k : sectors) {
    if (k < 0 || k > n) throw DomainError("sector " + std::to_string(k) + " out of range");
    min_rest = std::min(min_rest, std::max(0, k - 2));
    max_rest = std::max(max_rest, std::min(k, n - 2));
  }
  std::vector<std::size_t> offset(n, 0);
  for (int r = min_rest; r <= max_rest; ++r) {
    offset[r] = rest_count_;
    rest_count_ += binomial(n - 2, r);
  }

  for (int k : sectors) {
    const SectorBasis basis(n, k);
    SectorTable table;
    table.rest.resize(basis.dimension());
    table.pair_config.resize(basis.dimension());
    for (std::size_t i = 0; i < basis.dimension(); ++i) {
      const Bits s = basis.state(i);
      const Bits rest = squeeze_out(s & ~mask, lo, hi);
      const int a = static_cast<int>((s >> lo) & 1U);
      const int b = static_cast<int>((s >> hi) & 1U);
      table.rest[i] = static_cast<std::uint32_t>(offset[std::popcount(rest)] + colex_rank(rest));
      table.pair_config[i] = static_cast<std::uint8_t>(2 * a + b);
    }
    tables_.emplace(k, std::move(table));
  }
}

const PairTracer::SectorTable& PairTracer::table(int k) const {
  const auto it = tables_.find(k);
  if (it == tables_.end()) throw DomainError("tracer was not prepared for sector " + std::to_string(k));
  return it->second;
}

void PairTracer::gather(const SectorState& state, Eigen::MatrixXcd& table, std::size_t slot) const {
  if (!(state.layout() == layout_)) throw DomainError("state layout does not match tracer layout");
  const auto col0 = static_cast<Eigen::Index>(4 * slot);
  table.middleCols(col0, 4).setZero();
  for (const auto& [k, amps] : state.sectors()) {
    const SectorTable& t = this->table(k);
    for (Eigen::Index i = 0; i < amps.size(); ++i) {
      table(t.rest[i], col0 + t.pair_config[i]) = amps[i];
    }
  }
}

Eigen::Matrix4cd PairTracer::trace(const SectorState& bra, const SectorState& ket) const {
  Eigen::MatrixXcd table(static_cast<Eigen::Index>(rest_count_), 8);
  gather(ket, table, 0);
  gather(bra, table, 1);
  return table.leftCols(4).transpose() * table.rightCols(4).conjugate();
}

Eigen::Matrix4cd partial_trace_pair(const SectorState& bra, const SectorState& ket, std::size_t pair) {
  if (!(bra.layout() == ket.layout())) throw DomainError("partial trace across different layouts");
  std::vector<int> sectors;
  for (const auto& [k, v] : bra.sectors()) sectors.push_back(k);
  for (const auto& [k, v] : ket.sectors()) {
    if (!bra.has_sector(k)) sectors.push_back(k);
  }
  if (sectors.empty()) return Eigen::Matrix4cd::Zero();
  const PairTracer tracer(ket.layout(), pair, sectors);
  return tracer.trace(bra, ket);
}

}  // namespace spinbus
