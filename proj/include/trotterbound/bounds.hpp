#pragma once

// Per-slice error angles of a first-order Trotter trajectory and their
// aggregation into lower bounds on the final-state overlap.
//
// Three angle families are computed for every slice n:
//   exact         arccos|<Phi_n| U_n V_n^dagger |Phi_n>|, U_n the reference
//                 slice propagator and V_n the Trotter slice
//   approximate   (T^2 / 2M^2) |<Phi_n| A(nT/M) |Phi_n>|
//   conventional  (T^2 / 2M^2) ||A(nT/M)||
// where A is the ordered cross commutator of the Hamiltonian groups. Summing
// a family and taking cos(.) (clipped at zero past pi/2) yields a lower bound
// on |<Phi(T)|Psi(T)>|.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "trotterbound/errors.hpp"
#include "trotterbound/hamiltonian.hpp"
#include "trotterbound/operator.hpp"
#include "trotterbound/propagate.hpp"
#include "trotterbound/state.hpp"

namespace trotterbound {

struct StepErrorRecord {
  std::size_t n = 0;
  double t_n = 0.0;
  double L_exact = 0.0;
  double L_approx = 0.0;
  double L_conv = 0.0;
  cplx expectation_A{};
  double norm_A = 0.0;
};

struct BoundReport {
  std::size_t L = 0;
  double T = 0.0;
  std::size_t M = 0;
  double sum_L_exact = 0.0;
  double sum_L_approx = 0.0;
  double sum_L_conv = 0.0;
  double bound_exact = 1.0;
  double bound_approx = 1.0;
  double bound_conv = 1.0;
  std::optional<double> overlap_ref;
  double reference_tol = 0.0;
  bool valid = true;
  std::vector<StepErrorRecord> per_step;

  // Provenance of the numbers above.
  NormMethod norm_method = NormMethod::trivial;
  std::size_t reference_slices = 0;
  bool frozen_slice = false;
};

/// Slack allowed between the reference overlap and the exact bound before a
/// report is flagged invalid.
inline constexpr double kValiditySlack = 1e-8;

/// max(0, cos(sum)): past pi/2 only the trivial bound remains.
inline double overlap_bound(double angle_sum) {
  return angle_sum >= std::numbers::pi / 2 ? 0.0 : std::max(0.0, std::cos(angle_sum));
}

/// (T/M)^2 / 2, the prefactor of the second-order slice angles (hbar = 1).
inline double second_order_prefactor(double T, std::size_t M) {
  const double dt = T / static_cast<double>(M);
  return 0.5 * dt * dt;
}

// --- exact angle -----------------------------------------------------------

/// Angle between Phi_n and U_n Phi_{n-1} for a fixed slice reference. Since
/// Phi_n = V_n Phi_{n-1}, this is the exact angle with V_n^dagger Phi_n
/// replaced by the stored predecessor.
inline double exact_step_angle_from_pair(const StateVector& phi_prev, const StateVector& phi_n,
                                         const GroupedHamiltonian& h, std::size_t n, std::size_t M,
                                         const SliceReference& ref, const KrylovOptions& opt = {}) {
  phi_prev.check_same_size(phi_n);
  const Vector evolved = apply_slice_reference(h, phi_prev.amplitudes(), n, M, ref, false, opt);
  return fubini_study_angle(phi_n.amplitudes(), evolved);
}

struct ExactAngleOptions {
  double tol = 1e-13;
  bool frozen_slice = false;
  std::size_t max_subdivisions = std::size_t{1} << 20;
  KrylovOptions krylov{};
};

/// arccos|<Phi_n| U_n V_n^dagger |Phi_n>| with U_n refined until successive
/// refinements of U_n V_n^dagger Phi_n overlap to within `tol`.
inline double exact_step_angle(const StateVector& phi_n, const TrotterPlan& plan, std::size_t n,
                               const ExactAngleOptions& opt = {}) {
  const auto& h = plan.hamiltonian();
  const StateVector back = trotter_step_adjoint(phi_n, plan, n, opt.krylov);
  const std::size_t M = plan.slices();
  if (opt.frozen_slice) {
    const Vector evolved = apply_slice_reference(h, back.amplitudes(), n, M,
                                                 {SliceReference::Mode::frozen, 1}, false, opt.krylov);
    return fubini_study_angle(phi_n.amplitudes(), evolved);
  }
  std::size_t r = 1;
  Vector prev = evolve_interval(h, back.amplitudes(), plan.slice_start(n), plan.slice_time(n), r,
                                false, opt.krylov);
  while (2 * r <= opt.max_subdivisions) {
    r *= 2;
    Vector next = evolve_interval(h, back.amplitudes(), plan.slice_start(n), plan.slice_time(n), r,
                                  false, opt.krylov);
    const double dev = overlap_deviation(prev, next);
    prev = std::move(next);
    if (dev <= opt.tol) return fubini_study_angle(phi_n.amplitudes(), prev);
  }
  throw ConvergenceError(
      fmt::format("slice {} reference did not converge to {:.1e} within {} pieces", n, opt.tol, r));
}

// --- approximate and conventional angles -----------------------------------

struct ApproxAngle {
  double angle;
  cplx expectation_A;
};

/// (T^2 / 2M^2) |<Phi_n| A(nT/M) |Phi_n>|.
inline ApproxAngle approx_step_angle(const StateVector& phi_n, const GroupedHamiltonian& h,
                                     double T, std::size_t M, std::size_t n) {
  if (M == 0 || n < 1 || n > M) throw ArgumentError(fmt::format("slice index {} outside [1, {}]", n, M));
  const double t = T * static_cast<double>(n) / static_cast<double>(M);
  const PauliSum a = h.cross_commutator_A(t);
  const cplx ev = a.empty() ? cplx{} : expectation(a, phi_n);
  return {second_order_prefactor(T, M) * std::abs(ev), ev};
}

struct ConvAngle {
  double angle;
  double norm_A;
  NormMethod method;
};

/// (T^2 / 2M^2) ||A(nT/M)|| with the spectral norm.
inline ConvAngle conventional_step_angle(const GroupedHamiltonian& h, double T, std::size_t M,
                                         std::size_t n) {
  if (M == 0 || n < 1 || n > M) throw ArgumentError(fmt::format("slice index {} outside [1, {}]", n, M));
  const double t = T * static_cast<double>(n) / static_cast<double>(M);
  const auto norm = spectral_norm_with_method(h.cross_commutator_A(t));
  return {second_order_prefactor(T, M) * norm.value, norm.value, norm.method};
}

/// Evaluates ||A(t)|| along a trajectory. When only one pair of groups fails
/// to commute, A(t) = f_k(t) f_l(t) [B_k, B_l] and the norm of the fixed
/// commutator is computed once.
class CrossCommutatorNorms {
 public:
  explicit CrossCommutatorNorms(const GroupedHamiltonian& h) : h_(&h) {
    const auto& pairs = h.pair_commutators();
    if (pairs.size() == 1) {
      const auto r = spectral_norm_with_method(pairs.front().value);
      single_pair_norm_ = r.value;
      method_ = r.method;
    }
  }

  NormResult operator()(double t) const {
    const auto& pairs = h_->pair_commutators();
    if (pairs.empty()) return {0.0, NormMethod::trivial};
    if (single_pair_norm_) {
      const auto f = h_->schedule_values(t);
      const auto& p = pairs.front();
      return {std::abs(f[p.k] * f[p.l]) * *single_pair_norm_, method_};
    }
    return spectral_norm_with_method(h_->cross_commutator_A(t));
  }

 private:
  const GroupedHamiltonian* h_;
  std::optional<double> single_pair_norm_;
  NormMethod method_ = NormMethod::trivial;
};

// --- aggregation -------------------------------------------------------------

struct RunShape {
  std::size_t L = 0;
  double T = 0.0;
  std::size_t M = 0;
  double reference_tol = 0.0;
};

/// Sums each angle family and converts the sums into clipped overlap bounds.
inline BoundReport aggregate(std::vector<StepErrorRecord> records, std::optional<double> overlap_ref,
                             const RunShape& shape) {
  if (records.size() != shape.M)
    throw ArgumentError(fmt::format("{} step records for M = {}", records.size(), shape.M));
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  BoundReport rep;
  rep.L = shape.L;
  rep.T = shape.T;
  rep.M = shape.M;
  rep.reference_tol = shape.reference_tol;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].n != i + 1)
      throw ArgumentError(fmt::format("step records do not cover slice {}", i + 1));
    rep.sum_L_exact += records[i].L_exact;
    rep.sum_L_approx += records[i].L_approx;
    rep.sum_L_conv += records[i].L_conv;
  }
  rep.bound_exact = overlap_bound(rep.sum_L_exact);
  rep.bound_approx = overlap_bound(rep.sum_L_approx);
  rep.bound_conv = overlap_bound(rep.sum_L_conv);
  rep.overlap_ref = overlap_ref;
  rep.valid = !overlap_ref || *overlap_ref >= rep.bound_exact - kValiditySlack;
  rep.per_step = std::move(records);
  return rep;
}

// --- tightness ---------------------------------------------------------------

struct TightnessReport {
  double conv_minus_approx;         // L_conv - L_approx, expected >= 0
  double chord;                     // sqrt(2 - 2 cos L_exact)
  double one_minus_cos;             // 1 - cos L_exact
  double chord_minus_one_minus_cos; // expected >= 0
  bool holds;
};

inline TightnessReport tightness_check(const StepErrorRecord& rec, double tol = 1e-12) {
  TightnessReport t{};
  t.conv_minus_approx = rec.L_conv - rec.L_approx;
  // 2 sin(L/2) and 2 sin^2(L/2) are the cancellation-free forms.
  const double s = std::sin(rec.L_exact / 2.0);
  t.chord = 2.0 * std::abs(s);
  t.one_minus_cos = 2.0 * s * s;
  t.chord_minus_one_minus_cos = t.chord - t.one_minus_cos;
  t.holds = t.conv_minus_approx >= -tol && t.chord_minus_one_minus_cos >= -tol &&
            t.one_minus_cos >= 0.0;
  return t;
}

/// Spectral norm of U_n - V_n for one slice, assembled column by column from
/// the propagators. Dense, so limited to kDenseCap qubits.
inline double operator_step_error(const TrotterPlan& plan, std::size_t n, const SliceReference& ref,
                                  const KrylovOptions& opt = {}) {
  const auto& h = plan.hamiltonian();
  check_dense_cap(h.n_qubits());
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << h.n_qubits());
  Matrix diff(d, d);
  for (Eigen::Index b = 0; b < d; ++b) {
    const auto e = StateVector::basis(h.n_qubits(), static_cast<std::size_t>(b));
    const Vector u = apply_slice_reference(h, e.amplitudes(), n, plan.slices(), ref, false, opt);
    const Vector v = trotter_step(e, plan, n, opt).amplitudes();
    diff.col(b) = u - v;
  }
  Eigen::BDCSVD<Matrix> svd(diff);
  return svd.singularValues()(0);
}

// --- full pipeline -------------------------------------------------------------

struct PipelineOptions {
  double reference_tol = 1e-12;
  bool frozen_slice = false;
  std::size_t max_subdivisions = std::size_t{1} << 16;
  KrylovOptions krylov{};
};

/// Everything a bound run produces besides the report itself.
struct PipelineResult {
  BoundReport report;
  std::vector<StateVector> trajectory;  // Phi_0 .. Phi_M
  StateVector reference;                // Psi(T)
  SliceReference slice_reference;
};

/// Trotter trajectory, reference evolution on the same slice grid, and all
/// three angle families for every slice.
///
/// The reference state is the composition of the very slice propagators the
/// exact angles use, so the triangle-inequality bound holds for the computed
/// numbers up to roundoff, independently of how close the reference is to the
/// continuum limit.
inline PipelineResult run_bound_pipeline(const GroupedHamiltonian& h, const StateVector& psi0,
                                         std::size_t M, const PipelineOptions& opt = {}) {
  const TrotterPlan plan(h, M);
  const double T = h.total_time();
  auto traj = trotter_trajectory(psi0, plan, opt.krylov);

  SliceReference ref;
  StateVector psi_ref;
  std::size_t ref_slices = M;
  if (opt.frozen_slice) {
    ref = {SliceReference::Mode::frozen, 1};
    Vector v = psi0.amplitudes();
    for (std::size_t n = 1; n <= M; ++n) v = apply_slice_reference(h, v, n, M, ref, false, opt.krylov);
    psi_ref = StateVector(psi0.n_qubits(), std::move(v));
    psi_ref.check_norm();
  } else {
    ReferenceOptions ro;
    ro.aligned_slices = M;
    ro.max_subdivisions = opt.max_subdivisions;
    ro.krylov = opt.krylov;
    auto rr = reference_evolve(h, psi0, opt.reference_tol, ro);
    ref = {SliceReference::Mode::time_ordered, rr.subdivisions};
    ref_slices = rr.total_slices;
    psi_ref = std::move(rr.state);
  }

  const CrossCommutatorNorms norms(h);
  const double pref = second_order_prefactor(T, M);
  NormMethod method = NormMethod::trivial;
  std::vector<StepErrorRecord> records;
  records.reserve(M);
  for (std::size_t n = 1; n <= M; ++n) {
    StepErrorRecord rec;
    rec.n = n;
    rec.t_n = plan.slice_time(n);
    rec.L_exact = exact_step_angle_from_pair(traj[n - 1], traj[n], h, n, M, ref, opt.krylov);
    const auto approx = approx_step_angle(traj[n], h, T, M, n);
    rec.L_approx = approx.angle;
    rec.expectation_A = approx.expectation_A;
    const auto nr = norms(rec.t_n);
    rec.norm_A = nr.value;
    rec.L_conv = pref * nr.value;
    if (nr.method != NormMethod::trivial) method = nr.method;
    records.push_back(rec);
  }
  const double ov = overlap_magnitude(traj.back().amplitudes(), psi_ref.amplitudes());
  auto report = aggregate(std::move(records), ov, {h.n_qubits(), T, M, opt.reference_tol});
  report.norm_method = method;
  report.reference_slices = ref_slices;
  report.frozen_slice = opt.frozen_slice;
  return {std::move(report), std::move(traj), std::move(psi_ref), ref};
}

}  // namespace trotterbound
