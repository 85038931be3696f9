#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "trotterbound/errors.hpp"
#include "trotterbound/operator.hpp"
#include "trotterbound/pauli.hpp"
#include "trotterbound/schedule.hpp"

namespace trotterbound {

/// f(t) * base, with base Hermitian.
class HamiltonianGroup {
 public:
  /// `internally_commuting` is verified when true; when omitted it is
  /// detected from the strings.
  HamiltonianGroup(ScheduleFn schedule, PauliSum base,
                   std::optional<bool> internally_commuting = std::nullopt)
      : schedule_(std::move(schedule)), base_(std::move(base)), compiled_(base_) {
    if (!base_.all_real()) throw ArgumentError("group base must have real coefficients");
    const bool commuting = strings_commute(base_);
    if (internally_commuting.value_or(commuting) && !commuting)
      throw ArgumentError("group flagged internally commuting contains anticommuting strings");
    commuting_ = internally_commuting.value_or(commuting);
  }

  const ScheduleFn& schedule() const { return schedule_; }
  const PauliSum& base() const { return base_; }
  const CompiledPauliSum& compiled() const { return compiled_; }
  bool internally_commuting() const { return commuting_; }

  static bool strings_commute(const PauliSum& sum) {
    const auto terms = sum.terms();
    for (std::size_t i = 0; i < terms.size(); ++i)
      for (std::size_t j = i + 1; j < terms.size(); ++j)
        if (!terms[i].string.commutes_with(terms[j].string)) return false;
    return true;
  }

 private:
  ScheduleFn schedule_;
  PauliSum base_;
  CompiledPauliSum compiled_;
  bool commuting_ = false;
};

/// H(t) = sum_k f_k(t) B_k over an ordered list of groups. The order is the
/// Trotter factor order: group 0 acts on the state first within a slice.
class GroupedHamiltonian {
 public:
  GroupedHamiltonian(std::size_t n_qubits, double total_time, std::vector<HamiltonianGroup> groups)
      : n_qubits_(n_qubits), total_time_(total_time), groups_(std::move(groups)) {
    if (groups_.empty()) throw ArgumentError("Hamiltonian needs at least one group");
    if (!(total_time > 0.0) || !std::isfinite(total_time))
      throw ArgumentError("total time must be positive and finite");
    for (const auto& g : groups_) {
      if (g.base().n_qubits() != n_qubits_)
        throw DimensionError(fmt::format("group on {} qubits in a {}-qubit Hamiltonian",
                                         g.base().n_qubits(), n_qubits_));
      if (std::abs(g.schedule().total_time() - total_time_) > 1e-12 * total_time_)
        throw ArgumentError("group schedule total time differs from the Hamiltonian's");
    }
    // Pairwise commutators [B_k, B_l] for k > l; A(t) is bilinear in them.
    for (std::size_t k = 0; k < groups_.size(); ++k)
      for (std::size_t l = 0; l < k; ++l) {
        auto c = commutator(groups_[k].base(), groups_[l].base());
        if (!c.empty()) pair_commutators_.push_back({k, l, std::move(c)});
      }
  }

  struct PairCommutator {
    std::size_t k;
    std::size_t l;
    PauliSum value;
  };

  std::size_t n_qubits() const { return n_qubits_; }
  double total_time() const { return total_time_; }
  std::size_t size() const { return groups_.size(); }
  const std::vector<HamiltonianGroup>& groups() const { return groups_; }
  const HamiltonianGroup& group(std::size_t k) const { return groups_.at(k); }
  const std::vector<PairCommutator>& pair_commutators() const { return pair_commutators_; }

  /// Validates t against [0, T], absorbing roundoff at the endpoints.
  double checked_time(double t) const {
    const double slack = 1e-12 * total_time_;
    if (!(t >= -slack && t <= total_time_ + slack))
      throw ArgumentError(fmt::format("time {} outside [0, {}]", t, total_time_));
    return std::clamp(t, 0.0, total_time_);
  }

  std::vector<double> schedule_values(double t) const {
    t = checked_time(t);
    std::vector<double> f;
    f.reserve(groups_.size());
    for (const auto& g : groups_) f.push_back(g.schedule()(t));
    return f;
  }

  PauliSum evaluate(double t) const {
    const auto f = schedule_values(t);
    PauliSum out(n_qubits_);
    for (std::size_t k = 0; k < groups_.size(); ++k)
      if (f[k] != 0.0) out += groups_[k].base() * cplx(f[k]);
    return out;
  }

  /// A(t) = sum_{k > l} [f_k(t) B_k, f_l(t) B_l]. Anti-Hermitian.
  PauliSum cross_commutator_A(double t) const {
    const auto f = schedule_values(t);
    PauliSum out(n_qubits_);
    for (const auto& pc : pair_commutators_) {
      const double s = f[pc.k] * f[pc.l];
      if (s != 0.0) out += pc.value * cplx(s);
    }
    return out;
  }

  /// Same Hamiltonian with every schedule multiplied by `c`.
  GroupedHamiltonian scaled(double c) const {
    std::vector<HamiltonianGroup> gs;
    for (const auto& g : groups_)
      gs.emplace_back(g.schedule().scaled(c), g.base(), g.internally_commuting());
    return {n_qubits_, total_time_, std::move(gs)};
  }

 private:
  std::size_t n_qubits_;
  double total_time_;
  std::vector<HamiltonianGroup> groups_;
  std::vector<PairCommutator> pair_commutators_;
};

/// Annealing of the transverse-field Ising chain,
///   H(t) = -(t/T) sum_i Z_i Z_{i+1} - (1 - t/T) sum_i X_i,
/// as two groups in the order [ZZ, X].
inline GroupedHamiltonian build_tfi_annealing(std::size_t L, double T, bool periodic = true) {
  if (periodic && L < 3) throw ArgumentError("periodic TFI chain needs L >= 3");
  if (L < 2) throw ArgumentError("TFI chain needs L >= 2");
  check_matrix_free_cap(L);
  PauliSum zz(L), x(L);
  const std::size_t bonds = periodic ? L : L - 1;
  for (std::size_t i = 0; i < bonds; ++i) {
    PauliString s(L);
    s.set(i, Pauli::Z);
    s.set((i + 1) % L, Pauli::Z);
    zz += PauliSum::from_string(1.0, s);
  }
  for (std::size_t i = 0; i < L; ++i) x += PauliSum::from_string(1.0, PauliString::single(L, i, Pauli::X));
  std::vector<HamiltonianGroup> groups;
  groups.emplace_back(ScheduleFn::linear_ramp(0.0, -1.0, T), std::move(zz), true);
  groups.emplace_back(ScheduleFn::linear_ramp(-1.0, 1.0, T), std::move(x), true);
  return {L, T, std::move(groups)};
}

/// sum_i (Y_i Z_{i+1} + Z_i Y_{i+1}), the operator shape of the TFI cross
/// commutator.
inline PauliSum tfi_commutator_shape(std::size_t L, bool periodic = true) {
  PauliSum out(L);
  const std::size_t bonds = periodic ? L : L - 1;
  for (std::size_t i = 0; i < bonds; ++i) {
    PauliString yz(L), zy(L);
    yz.set(i, Pauli::Y);
    yz.set((i + 1) % L, Pauli::Z);
    zy.set(i, Pauli::Z);
    zy.set((i + 1) % L, Pauli::Y);
    out += PauliSum::from_string(1.0, yz);
    out += PauliSum::from_string(1.0, zy);
  }
  return out;
}

}  // namespace trotterbound
