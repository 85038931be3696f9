#pragma once

// Pure-state propagation: group exponentials, first-order Trotter slices,
// exact frozen-Hamiltonian slices, and the refined time-ordered reference.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "trotterbound/errors.hpp"
#include "trotterbound/hamiltonian.hpp"
#include "trotterbound/krylov.hpp"
#include "trotterbound/operator.hpp"
#include "trotterbound/state.hpp"

namespace trotterbound {

/// First-order product formula with M equal slices over [0, T].
class TrotterPlan {
 public:
  TrotterPlan(GroupedHamiltonian h, std::size_t slices) : h_(std::move(h)), slices_(slices) {
    if (slices_ == 0) throw ArgumentError("Trotter plan needs M >= 1");
  }

  const GroupedHamiltonian& hamiltonian() const { return h_; }
  std::size_t slices() const { return slices_; }
  double total_time() const { return h_.total_time(); }
  double dt() const { return h_.total_time() / static_cast<double>(slices_); }

  void check_slice(std::size_t m) const {
    if (m < 1 || m > slices_)
      throw ArgumentError(fmt::format("slice index {} outside [1, {}]", m, slices_));
  }

  /// Right endpoint t_m = m T / M, where slice m samples the Hamiltonian.
  double slice_time(std::size_t m) const {
    check_slice(m);
    return h_.total_time() * static_cast<double>(m) / static_cast<double>(slices_);
  }
  double slice_start(std::size_t m) const {
    check_slice(m);
    return h_.total_time() * static_cast<double>(m - 1) / static_cast<double>(slices_);
  }

 private:
  GroupedHamiltonian h_;
  std::size_t slices_;
};

namespace detail {

inline void check_state_for(const StateVector& psi, std::size_t n_qubits) {
  if (psi.n_qubits() != n_qubits)
    throw DimensionError(
        fmt::format("{}-qubit state for a {}-qubit Hamiltonian", psi.n_qubits(), n_qubits));
}

// exp(-i theta sum_k w_k B_k) v
inline Vector expm_weighted(const GroupedHamiltonian& h, const std::vector<double>& weights,
                            const Vector& v, double theta, const KrylovOptions& opt) {
  bool any = false;
  for (double w : weights) any |= (w != 0.0);
  if (!any || theta == 0.0) return v;
  auto apply = [&](const Vector& x) {
    Vector out = Vector::Zero(x.size());
    for (std::size_t k = 0; k < weights.size(); ++k)
      if (weights[k] != 0.0) h.group(k).compiled().apply_add(x, out, weights[k]);
    return out;
  };
  return expm_hermitian_apply(apply, v, theta, opt);
}

// exp(-i theta B) v for a group, term by term when the strings commute.
inline void apply_group_exponential_inplace(Vector& v, const HamiltonianGroup& g, double theta,
                                            const KrylovOptions& opt) {
  if (theta == 0.0) return;
  if (!g.internally_commuting()) {
    auto apply = [&](const Vector& x) { return g.compiled().apply(x); };
    v = expm_hermitian_apply(apply, v, theta, opt);
    return;
  }
  const std::uint64_t d = static_cast<std::uint64_t>(v.size());
  Vector scratch(v.size());
  for (const auto& e : g.compiled().entries()) {
    // Real coefficient c: exp(-i theta c P) = cos(theta c) - i sin(theta c) P.
    const cplx unit = detail::i_power(std::popcount(e.x & e.z));
    const double c = std::real(e.weight * std::conj(unit));
    const double cs = std::cos(theta * c);
    const cplx mis = cplx(0.0, -std::sin(theta * c));
    if (e.x == 0) {
      // Diagonal string: a phase per basis state.
      const cplx plus = cs + mis;
      const cplx minus = cs - mis;
      for (std::uint64_t b = 0; b < d; ++b) v[b] *= (std::popcount(b & e.z) & 1) ? minus : plus;
      continue;
    }
    scratch.setZero();
    for (std::uint64_t b = 0; b < d; ++b) {
      const cplx val = (std::popcount(b & e.z) & 1) ? -v[b] : v[b];
      scratch[b ^ e.x] += unit * val;
    }
    v = cs * v + mis * scratch;
  }
}

}  // namespace detail

/// exp(-i theta B_g) psi.
inline StateVector apply_group_exponential(const StateVector& psi, const HamiltonianGroup& g,
                                           double theta, const KrylovOptions& opt = {}) {
  detail::check_state_for(psi, g.base().n_qubits());
  Vector v = psi.amplitudes();
  detail::apply_group_exponential_inplace(v, g, theta, opt);
  return {psi.n_qubits(), std::move(v)};
}

/// Trotter slice m (or its inverse) on an arbitrary vector, no norm check.
inline void apply_trotter_slice(Vector& v, const TrotterPlan& plan, std::size_t m, bool adjoint = false,
                                const KrylovOptions& opt = {}) {
  const auto& h = plan.hamiltonian();
  const auto f = h.schedule_values(plan.slice_time(m));
  if (!adjoint) {
    for (std::size_t k = 0; k < h.size(); ++k)
      detail::apply_group_exponential_inplace(v, h.group(k), plan.dt() * f[k], opt);
  } else {
    for (std::size_t k = h.size(); k-- > 0;)
      detail::apply_group_exponential_inplace(v, h.group(k), -plan.dt() * f[k], opt);
  }
}

/// One first-order Trotter slice: groups applied in stored order with
/// theta_k = (T/M) f_k(m T/M).
inline StateVector trotter_step(const StateVector& psi, const TrotterPlan& plan, std::size_t m,
                                const KrylovOptions& opt = {}) {
  detail::check_state_for(psi, plan.hamiltonian().n_qubits());
  Vector v = psi.amplitudes();
  apply_trotter_slice(v, plan, m, false, opt);
  StateVector out(psi.n_qubits(), std::move(v));
  out.check_norm();
  return out;
}

/// Inverse of trotter_step.
inline StateVector trotter_step_adjoint(const StateVector& psi, const TrotterPlan& plan,
                                        std::size_t m, const KrylovOptions& opt = {}) {
  detail::check_state_for(psi, plan.hamiltonian().n_qubits());
  Vector v = psi.amplitudes();
  apply_trotter_slice(v, plan, m, true, opt);
  StateVector out(psi.n_qubits(), std::move(v));
  out.check_norm();
  return out;
}

/// Full Trotter trajectory: element n holds Phi(nT/M), element 0 the input.
inline std::vector<StateVector> trotter_trajectory(const StateVector& psi0, const TrotterPlan& plan,
                                                   const KrylovOptions& opt = {}) {
  std::vector<StateVector> out;
  out.reserve(plan.slices() + 1);
  out.push_back(psi0);
  for (std::size_t m = 1; m <= plan.slices(); ++m) out.push_back(trotter_step(out.back(), plan, m, opt));
  return out;
}

/// exp(-i (T/M) H(m T/M)) psi with the summed Hamiltonian.
inline StateVector slice_exact_step(const StateVector& psi, const GroupedHamiltonian& h,
                                    std::size_t m, std::size_t M, const KrylovOptions& opt = {}) {
  detail::check_state_for(psi, h.n_qubits());
  if (M == 0 || m < 1 || m > M)
    throw ArgumentError(fmt::format("slice index {} outside [1, {}]", m, M));
  const double dt = h.total_time() / static_cast<double>(M);
  const double t = h.total_time() * static_cast<double>(m) / static_cast<double>(M);
  StateVector out(psi.n_qubits(),
                  detail::expm_weighted(h, h.schedule_values(t), psi.amplitudes(), dt, opt));
  out.check_norm();
  return out;
}

/// Time-ordered propagation over [t0, t1] by `subdivisions` piecewise-constant
/// pieces sampled at their midpoints. `adjoint` applies the inverse map.
inline Vector evolve_interval(const GroupedHamiltonian& h, const Vector& v, double t0, double t1,
                              std::size_t subdivisions, bool adjoint = false,
                              const KrylovOptions& opt = {}) {
  if (subdivisions == 0) throw ArgumentError("interval propagation needs at least one piece");
  const double width = (t1 - t0) / static_cast<double>(subdivisions);
  const double r = static_cast<double>(subdivisions);
  Vector w = v;
  for (std::size_t step = 0; step < subdivisions; ++step) {
    const std::size_t j = adjoint ? subdivisions - 1 - step : step;
    // Interpolate from both ends so the last midpoint is as accurate as the first.
    const double frac = (static_cast<double>(j) + 0.5) / r;
    const double t_mid = t0 * (1.0 - frac) + t1 * frac;
    w = detail::expm_weighted(h, h.schedule_values(t_mid), w, adjoint ? -width : width, opt);
  }
  return w;
}

/// How the propagator of one Trotter slice is realized for reference purposes.
struct SliceReference {
  enum class Mode { time_ordered, frozen };
  Mode mode = Mode::time_ordered;
  /// Midpoint pieces per slice in time-ordered mode.
  std::size_t subdivisions = 1;
};

/// Reference propagator of slice n of M applied to v (or its inverse).
inline Vector apply_slice_reference(const GroupedHamiltonian& h, const Vector& v, std::size_t n,
                                    std::size_t M, const SliceReference& ref, bool adjoint = false,
                                    const KrylovOptions& opt = {}) {
  if (M == 0 || n < 1 || n > M) throw ArgumentError(fmt::format("slice index {} outside [1, {}]", n, M));
  const double T = h.total_time();
  const double t0 = T * static_cast<double>(n - 1) / static_cast<double>(M);
  const double t1 = T * static_cast<double>(n) / static_cast<double>(M);
  if (ref.mode == SliceReference::Mode::frozen) {
    const double dt = T / static_cast<double>(M);
    return detail::expm_weighted(h, h.schedule_values(t1), v, adjoint ? -dt : dt, opt);
  }
  return evolve_interval(h, v, t0, t1, ref.subdivisions, adjoint, opt);
}

struct ReferenceOptions {
  /// Refinement grid is aligned to this many equal slices (R = slices * r).
  std::size_t aligned_slices = 1;
  std::size_t initial_subdivisions = 1;
  std::size_t max_subdivisions = std::size_t{1} << 16;
  KrylovOptions krylov{};
};

struct ReferenceResult {
  StateVector state;
  std::size_t total_slices = 0;    // R
  std::size_t subdivisions = 0;    // R / aligned_slices
  double deviation = 0.0;          // 1 - |<psi_R/2|psi_R>| at termination
  int refinements = 0;
};

/// 1 - |<a|b>| evaluated without cancellation.
inline double overlap_deviation(const Vector& a, const Vector& b) {
  const double s = std::sin(fubini_study_angle(a, b) / 2.0);
  return 2.0 * s * s;
}

/// Approximates the time-ordered propagator on [0, T] by midpoint
/// piecewise-constant evolution, doubling the slice count until successive
/// refinements overlap to within `tol`.
inline ReferenceResult reference_evolve(const GroupedHamiltonian& h, const StateVector& psi0,
                                        double tol, const ReferenceOptions& opt = {}) {
  detail::check_state_for(psi0, h.n_qubits());
  if (!(tol > 0.0)) throw ArgumentError("reference tolerance must be positive");
  if (opt.aligned_slices == 0 || opt.initial_subdivisions == 0)
    throw ArgumentError("reference refinement needs positive slice counts");
  const std::size_t M = opt.aligned_slices;
  auto run = [&](std::size_t r) {
    Vector v = psi0.amplitudes();
    for (std::size_t n = 1; n <= M; ++n)
      v = apply_slice_reference(h, v, n, M, {SliceReference::Mode::time_ordered, r}, false, opt.krylov);
    return v;
  };
  std::size_t r = opt.initial_subdivisions;
  Vector prev = run(r);
  double deviation = 1.0;
  int refinements = 0;
  while (2 * r <= opt.max_subdivisions) {
    r *= 2;
    ++refinements;
    Vector next = run(r);
    deviation = overlap_deviation(prev, next);
    prev = std::move(next);
    if (deviation <= tol) {
      StateVector state(psi0.n_qubits(), std::move(prev));
      state.check_norm();
      return {std::move(state), M * r, r, deviation, refinements};
    }
  }
  throw ConvergenceError(fmt::format(
      "reference evolution did not reach tolerance {:.1e} (last deviation {:.3e} at {} slices)", tol,
      deviation, M * r));
}

}  // namespace trotterbound
