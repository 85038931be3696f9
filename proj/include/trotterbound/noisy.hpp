#pragma once

// Density-matrix simulation of Trotterized dynamics interleaved with a
// depolarizing channel, Bures angles, and the per-slice noisy error angles.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "trotterbound/bounds.hpp"
#include "trotterbound/errors.hpp"
#include "trotterbound/hamiltonian.hpp"
#include "trotterbound/operator.hpp"
#include "trotterbound/propagate.hpp"
#include "trotterbound/state.hpp"

namespace trotterbound {

inline constexpr double kDensityTolerance = 1e-10;
/// Eigenvalues below this count as zero in the restricted spectral sums.
inline constexpr double kZeroEigenvalue = 1e-12;
/// Eigenvalues below this are dropped from square-root factors in the
/// fidelity; they are indistinguishable from roundoff of a rank-deficient
/// matrix.
inline constexpr double kFidelityRankCutoff = 1e-13;

inline void check_density_cap(std::size_t n_qubits) {
  if (n_qubits > kDensityCap)
    throw CapacityError(
        fmt::format("{} qubits exceeds the density-matrix cap of {}", n_qubits, kDensityCap));
}

class DensityMatrix {
 public:
  DensityMatrix() = default;

  DensityMatrix(std::size_t n_qubits, Matrix m) : n_qubits_(n_qubits), m_(std::move(m)) {
    check_density_cap(n_qubits);
    const auto d = static_cast<Eigen::Index>(dim());
    if (m_.rows() != d || m_.cols() != d)
      throw DimensionError(fmt::format("{}x{} matrix for {} qubits", m_.rows(), m_.cols(), n_qubits));
  }

  static DensityMatrix pure(const StateVector& psi) {
    return {psi.n_qubits(), psi.amplitudes() * psi.amplitudes().adjoint()};
  }

  static DensityMatrix maximally_mixed(std::size_t n_qubits) {
    const auto d = Eigen::Index{1} << n_qubits;
    return {n_qubits, Matrix::Identity(d, d) / static_cast<double>(d)};
  }

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return std::size_t{1} << n_qubits_; }
  const Matrix& matrix() const { return m_; }

  cplx trace() const { return m_.trace(); }
  double purity() const { return m_.squaredNorm(); }

  double hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }

  /// Hermiticity and unit trace; `check_positivity` adds an eigenvalue scan.
  void validate(bool check_positivity = true, double tol = kDensityTolerance) const {
    if (hermiticity_error() > tol)
      throw NumericalHealthError(
          fmt::format("density matrix not Hermitian (error {:.3e})", hermiticity_error()));
    if (std::abs(trace() - 1.0) > tol)
      throw NumericalHealthError(fmt::format("density matrix trace {} differs from one",
                                             trace().real()));
    if (check_positivity) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) < -tol)
        throw NumericalHealthError(
            fmt::format("density matrix eigenvalue {:.3e} is negative", es.eigenvalues()(0)));
    }
  }

  void check_same_size(const DensityMatrix& other) const {
    if (other.n_qubits_ != n_qubits_)
      throw DimensionError(fmt::format("density matrices on {} and {} qubits", n_qubits_,
                                       other.n_qubits_));
  }

 private:
  std::size_t n_qubits_ = 0;
  Matrix m_;
};

/// Depolarizing noise with p = gamma T / M per slice (hbar = 1).
struct NoiseModel {
  double gamma = 0.0;

  double p_of(double T, std::size_t M) const {
    if (!(gamma >= 0.0)) throw ArgumentError("decay rate must be non-negative");
    const double p = gamma * T / static_cast<double>(M);
    if (p > 1.0)
      throw ArgumentError(fmt::format("depolarizing ratio gamma T / M = {} exceeds one", p));
    return p;
  }
};

/// (1 - p) rho + p I / D
inline DensityMatrix depolarize(const DensityMatrix& rho, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError(fmt::format("depolarizing ratio {} outside [0, 1]", p));
  const auto d = static_cast<Eigen::Index>(rho.dim());
  Matrix out = (1.0 - p) * rho.matrix();
  out.diagonal().array() += p / static_cast<double>(d);
  return {rho.n_qubits(), std::move(out)};
}

/// W rho W^dagger for a unitary W given by its action on vectors.
template <typename ApplyUnitary>
DensityMatrix conjugate_by(const DensityMatrix& rho, ApplyUnitary&& apply) {
  const Matrix& m = rho.matrix();
  Matrix left(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) left.col(c) = apply(Vector(m.col(c)));
  // (W (W rho)^dagger)^dagger = W rho W^dagger
  const Matrix left_adj = left.adjoint();
  Matrix right(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) right.col(c) = apply(Vector(left_adj.col(c)));
  Matrix out = right.adjoint();
  // Symmetrize away the roundoff asymmetry of the two-sided product.
  Matrix sym = 0.5 * (out + out.adjoint());
  return {rho.n_qubits(), std::move(sym)};
}

/// Trotter slice m as a unitary map on density matrices.
inline DensityMatrix apply_trotter_map(const DensityMatrix& rho, const TrotterPlan& plan, std::size_t m,
                                       const KrylovOptions& opt = {}) {
  if (rho.n_qubits() != plan.hamiltonian().n_qubits())
    throw DimensionError("density matrix does not match the Hamiltonian");
  return conjugate_by(rho, [&](const Vector& v) {
    Vector w = v;
    apply_trotter_slice(w, plan, m, false, opt);
    return w;
  });
}

struct NoisyTrajectory {
  DensityMatrix final_state;
  std::vector<DensityMatrix> trajectory;  // sigma_0 .. sigma_M when kept
};

/// sigma(nT/M) = (E o D_n) ... (E o D_1)[rho0], depolarizing E with p = gamma T / M.
inline NoisyTrajectory noisy_evolve(const TrotterPlan& plan, const NoiseModel& noise,
                                    const DensityMatrix& rho0, bool keep_trajectory = true,
                                    const KrylovOptions& opt = {}) {
  check_density_cap(plan.hamiltonian().n_qubits());
  if (rho0.n_qubits() != plan.hamiltonian().n_qubits())
    throw DimensionError("initial density matrix does not match the Hamiltonian");
  const double p = noise.p_of(plan.total_time(), plan.slices());
  const bool scan_eigenvalues = rho0.n_qubits() <= 6;
  NoisyTrajectory out{rho0, {}};
  if (keep_trajectory) out.trajectory.push_back(rho0);
  for (std::size_t m = 1; m <= plan.slices(); ++m) {
    out.final_state = depolarize(apply_trotter_map(out.final_state, plan, m, opt), p);
    out.final_state.validate(scan_eigenvalues);
    if (keep_trajectory) out.trajectory.push_back(out.final_state);
  }
  return out;
}

inline NoisyTrajectory noisy_evolve(const TrotterPlan& plan, const NoiseModel& noise,
                                    bool keep_trajectory = true) {
  return noisy_evolve(plan, noise,
                      DensityMatrix::pure(StateVector::all_zeros(plan.hamiltonian().n_qubits())),
                      keep_trajectory);
}

// --- spectra and Bures angle -------------------------------------------------

/// sum_i p_i |i><i| with p_i descending.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Matrix eigenvectors;  // columns
};

inline SpectralDecomposition spectral_decomposition(const DensityMatrix& rho,
                                                    double negative_tol = kDensityTolerance) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
  if (es.info() != Eigen::Success) throw NumericalHealthError("eigendecomposition failed");
  const auto d = es.eigenvalues().size();
  SpectralDecomposition out{Eigen::VectorXd(d), Matrix(d, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    // Eigen sorts ascending; reverse into descending order.
    double p = es.eigenvalues()(d - 1 - i);
    if (p < -negative_tol)
      throw ArgumentError(fmt::format("matrix is not positive semidefinite (eigenvalue {:.3e})", p));
    out.eigenvalues(i) = std::max(p, 0.0);
    out.eigenvectors.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  return out;
}

namespace detail {

// Columns sqrt(p_i) |i> for eigenvalues above the fidelity cutoff.
inline Matrix sqrt_factor(const SpectralDecomposition& s) {
  Eigen::Index rank = 0;
  while (rank < s.eigenvalues.size() && s.eigenvalues(rank) > kFidelityRankCutoff) ++rank;
  Matrix f(s.eigenvectors.rows(), rank);
  for (Eigen::Index i = 0; i < rank; ++i) f.col(i) = std::sqrt(s.eigenvalues(i)) * s.eigenvectors.col(i);
  return f;
}

}  // namespace detail

/// Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)), as the trace norm of
/// sqrt(rho) sqrt(sigma) reduced to the supports of both matrices.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  rho.check_same_size(sigma);
  const Matrix fr = detail::sqrt_factor(spectral_decomposition(rho));
  const Matrix fs = detail::sqrt_factor(spectral_decomposition(sigma));
  if (fr.cols() == 0 || fs.cols() == 0) return 0.0;
  const Matrix w = fr.adjoint() * fs;
  Eigen::BDCSVD<Matrix> svd(w);
  return svd.singularValues().sum();
}

/// arccos of the fidelity, in [0, pi/2]. Rank-one pairs use the
/// Fubini-Study angle of their support vectors.
inline double bures_angle(const DensityMatrix& rho, const DensityMatrix& sigma) {
  rho.check_same_size(sigma);
  const auto sr = spectral_decomposition(rho);
  const auto ss = spectral_decomposition(sigma);
  const Matrix fr = detail::sqrt_factor(sr);
  const Matrix fs = detail::sqrt_factor(ss);
  if (fr.cols() == 0 || fs.cols() == 0) return std::numbers::pi / 2;
  if (fr.cols() == 1 && fs.cols() == 1) {
    const double wr = sr.eigenvalues(0), ws = ss.eigenvalues(0);
    if (std::abs(wr - 1.0) <= kDensityTolerance && std::abs(ws - 1.0) <= kDensityTolerance)
      return fubini_study_angle(Vector(sr.eigenvectors.col(0)), Vector(ss.eigenvectors.col(0)));
  }
  Eigen::BDCSVD<Matrix> svd(fr.adjoint() * fs);
  const double f = svd.singularValues().sum();
  if (f > 1.0 + kOverlapSlack)
    throw NumericalHealthError(fmt::format("fidelity {:.17g} exceeds one", f));
  return std::acos(std::min(1.0, f));
}

/// Bures angle to a pure state, arccos sqrt(<psi|sigma|psi>).
inline double bures_angle(const DensityMatrix& sigma, const StateVector& psi) {
  return bures_angle(sigma, DensityMatrix::pure(psi));
}

// --- noisy slice angles ------------------------------------------------------

/// Bures angle between F[sigma_prev] = U_n^dagger (E o D_n)[sigma_prev] U_n
/// and sigma_prev, with U_n the slice reference propagator.
inline double noisy_step_angle_exact(const DensityMatrix& sigma_prev, const TrotterPlan& plan,
                                     const NoiseModel& noise, std::size_t n,
                                     const SliceReference& ref, const KrylovOptions& opt = {}) {
  plan.check_slice(n);
  const auto& h = plan.hamiltonian();
  const double p = noise.p_of(plan.total_time(), plan.slices());
  const DensityMatrix noisy = depolarize(apply_trotter_map(sigma_prev, plan, n, opt), p);
  const DensityMatrix pulled = conjugate_by(noisy, [&](const Vector& v) {
    return apply_slice_reference(h, v, n, plan.slices(), ref, /*adjoint=*/true, opt);
  });
  return bures_angle(pulled, sigma_prev);
}

struct NoisyApproxAngle {
  double angle = 0.0;
  double coherent_sum = 0.0;  // sum (p_i - p_j)^2 / (p_i + p_j) |<i|A|j>|^2
  double noise_sum = 0.0;     // sum (p_i - 1/D)^2 / (2 p_i)
  bool rank_deficient = false;
};

/// Second-order noisy slice angle from the spectrum of sigma_prev:
///   sqrt( 1/2 (T^2/2M^2)^2 sum_{p_i + p_j != 0} (p_i - p_j)^2/(p_i + p_j) |A_ij|^2
///       + 1/2 (gamma T/M)^2 sum_{p_i != 0} (p_i - 1/D)^2 / (2 p_i) ).
inline NoisyApproxAngle noisy_step_angle_approx(const DensityMatrix& sigma_prev,
                                                const GroupedHamiltonian& h, double T, std::size_t M,
                                                double gamma, std::size_t n) {
  if (M == 0 || n < 1 || n > M) throw ArgumentError(fmt::format("slice index {} outside [1, {}]", n, M));
  if (sigma_prev.n_qubits() != h.n_qubits())
    throw DimensionError("density matrix does not match the Hamiltonian");
  const auto spec = spectral_decomposition(sigma_prev);
  const auto d = spec.eigenvalues.size();
  const double inv_d = 1.0 / static_cast<double>(d);
  Eigen::VectorXd p = spec.eigenvalues;
  NoisyApproxAngle out;
  for (Eigen::Index i = 0; i < d; ++i)
    if (p(i) < kZeroEigenvalue) {
      p(i) = 0.0;
      out.rank_deficient = true;
    }

  const double t = T * static_cast<double>(n) / static_cast<double>(M);
  const PauliSum a = h.cross_commutator_A(t);
  if (!a.empty()) {
    const CompiledPauliSum ka(a);
    Matrix av(d, d);
    for (Eigen::Index j = 0; j < d; ++j) av.col(j) = ka.apply(Vector(spec.eigenvectors.col(j)));
    const Matrix g = spec.eigenvectors.adjoint() * av;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        const double s = p(i) + p(j);
        if (s == 0.0) continue;
        const double diff = p(i) - p(j);
        out.coherent_sum += diff * diff / s * std::norm(g(i, j));
      }
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (p(i) == 0.0) continue;
    const double diff = p(i) - inv_d;
    out.noise_sum += diff * diff / (2.0 * p(i));
  }
  const double pref = second_order_prefactor(T, M);
  const double rate = gamma * T / static_cast<double>(M);
  out.angle = std::sqrt(0.5 * pref * pref * out.coherent_sum + 0.5 * rate * rate * out.noise_sum);
  return out;
}

/// Tr(sigma A)
inline cplx expectation(const PauliSum& a, const DensityMatrix& sigma) {
  if (a.n_qubits() != sigma.n_qubits()) throw DimensionError("operator does not match density matrix");
  if (a.empty()) return {};
  const CompiledPauliSum ka(a);
  cplx tr = 0.0;
  const Matrix& m = sigma.matrix();
  for (Eigen::Index c = 0; c < m.cols(); ++c) tr += ka.apply(Vector(m.col(c)))(c);
  return tr;
}

// --- aggregation -------------------------------------------------------------

struct NoisyReport {
  BoundReport bounds;  // overlap_ref holds cos(bures_final)
  double gamma = 0.0;
  double p_per_step = 0.0;
  double bures_final = 0.0;
  double purity_final = 1.0;
  bool rank_warning = false;
};

/// Noisy counterpart of `aggregate`: the reference overlap is the fidelity
/// cos(Bures angle) between the final noisy state and the reference state.
inline NoisyReport aggregate_noisy(std::vector<StepErrorRecord> records,
                                   std::optional<double> bures_ref, const RunShape& shape) {
  NoisyReport rep;
  std::optional<double> fid;
  if (bures_ref) fid = std::cos(*bures_ref);
  rep.bounds = aggregate(std::move(records), fid, shape);
  if (bures_ref) rep.bures_final = *bures_ref;
  return rep;
}

struct NoisyPipelineOptions {
  double reference_tol = 1e-12;
  bool frozen_slice = false;
  std::size_t max_subdivisions = std::size_t{1} << 16;
  KrylovOptions krylov{};
};

struct NoisyPipelineResult {
  NoisyReport report;
  std::vector<DensityMatrix> trajectory;
  StateVector reference;
  SliceReference slice_reference;
};

/// Noisy trajectory from |psi0><psi0|, the pure reference on the slice grid,
/// and per slice: the exact Bures angle, the spectral approximation, the
/// conventional angle, and |Tr(sigma_n A)|.
inline NoisyPipelineResult run_noisy_pipeline(const GroupedHamiltonian& h, const StateVector& psi0,
                                              std::size_t M, double gamma,
                                              const NoisyPipelineOptions& opt = {}) {
  check_density_cap(h.n_qubits());
  const TrotterPlan plan(h, M);
  const NoiseModel noise{gamma};
  const double T = h.total_time();
  const double p = noise.p_of(T, M);

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

  auto traj = noisy_evolve(plan, noise, DensityMatrix::pure(psi0), true, opt.krylov);

  const CrossCommutatorNorms norms(h);
  const double pref = second_order_prefactor(T, M);
  NormMethod method = NormMethod::trivial;
  bool rank_warning = false;
  std::vector<StepErrorRecord> records;
  records.reserve(M);
  for (std::size_t n = 1; n <= M; ++n) {
    StepErrorRecord rec;
    rec.n = n;
    rec.t_n = plan.slice_time(n);
    rec.L_exact = noisy_step_angle_exact(traj.trajectory[n - 1], plan, noise, n, ref, opt.krylov);
    const auto approx = noisy_step_angle_approx(traj.trajectory[n - 1], h, T, M, gamma, n);
    rec.L_approx = approx.angle;
    rank_warning |= approx.rank_deficient && gamma > 0.0;
    rec.expectation_A = expectation(h.cross_commutator_A(rec.t_n), traj.trajectory[n]);
    const auto nr = norms(rec.t_n);
    rec.norm_A = nr.value;
    rec.L_conv = pref * nr.value;
    if (nr.method != NormMethod::trivial) method = nr.method;
    records.push_back(rec);
  }
  const double bures = bures_angle(traj.final_state, psi_ref);
  auto report = aggregate_noisy(std::move(records), bures, {h.n_qubits(), T, M, opt.reference_tol});
  report.gamma = gamma;
  report.p_per_step = p;
  report.purity_final = traj.final_state.purity();
  report.rank_warning = rank_warning;
  report.bounds.norm_method = method;
  report.bounds.reference_slices = ref_slices;
  report.bounds.frozen_slice = opt.frozen_slice;
  return {std::move(report), std::move(traj.trajectory), std::move(psi_ref), ref};
}

}  // namespace trotterbound
