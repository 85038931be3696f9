#pragma once

// Realizations of PauliSum as linear maps: a matrix-free kernel acting on
// amplitude vectors, the dense matrix, expectation values and spectral norms.

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "trotterbound/errors.hpp"
#include "trotterbound/pauli.hpp"
#include "trotterbound/state.hpp"

namespace trotterbound {

/// PauliSum lowered to (x mask, z mask, weight) triples so that
/// P|b> = weight * (-1)^{popcount(b & z)} |b ^ x>.
class CompiledPauliSum {
 public:
  struct Entry {
    std::uint64_t x;
    std::uint64_t z;
    cplx weight;
  };

  CompiledPauliSum() = default;

  explicit CompiledPauliSum(const PauliSum& sum) : n_qubits_(sum.n_qubits()) {
    if (n_qubits_ > 63) throw CapacityError("compiled Pauli sums support at most 63 qubits");
    for (const auto& [s, c] : sum)
      entries_.push_back({s.x_mask(), s.z_mask(), c * detail::i_power(s.y_count())});
  }

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return std::size_t{1} << n_qubits_; }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// out += scale * A * in
  void apply_add(const Vector& in, Vector& out, cplx scale = 1.0) const {
    check(in);
    check(out);
    const std::uint64_t d = dim();
    for (const auto& e : entries_) {
      const cplx w = scale * e.weight;
      for (std::uint64_t b = 0; b < d; ++b) {
        const cplx v = (std::popcount(b & e.z) & 1) ? -in[b] : in[b];
        out[b ^ e.x] += w * v;
      }
    }
  }

  Vector apply(const Vector& in) const {
    Vector out = Vector::Zero(in.size());
    apply_add(in, out);
    return out;
  }

  /// A^dagger: each string is Hermitian, so only coefficients conjugate.
  CompiledPauliSum adjoint() const {
    CompiledPauliSum out = *this;
    for (auto& e : out.entries_) {
      // weight = c * i^{ny}; the adjoint string has coefficient conj(c).
      // Recover conj(c) * i^{ny} = conj(weight) * i^{2 ny}, and i^{2 ny} = +-1
      // equals the sign of (-1)^{popcount(x & z)}.
      const cplx sign = (std::popcount(e.x & e.z) & 1) ? -1.0 : 1.0;
      e.weight = std::conj(e.weight) * sign;
    }
    return out;
  }

  /// <psi|A|psi> accumulated in a fixed order.
  cplx expectation(const Vector& psi) const {
    check(psi);
    const std::uint64_t d = dim();
    cplx total = 0.0;
    for (const auto& e : entries_) {
      cplx acc = 0.0;
      for (std::uint64_t b = 0; b < d; ++b) {
        const cplx v = (std::popcount(b & e.z) & 1) ? -psi[b] : psi[b];
        acc += std::conj(psi[b ^ e.x]) * v;
      }
      total += e.weight * acc;
    }
    return total;
  }

 private:
  void check(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != dim())
      throw DimensionError(
          fmt::format("vector of length {} for a {}-qubit operator", v.size(), n_qubits_));
  }

  std::size_t n_qubits_ = 0;
  std::vector<Entry> entries_;
};

inline void check_dense_cap(std::size_t n_qubits) {
  if (n_qubits > kDenseCap)
    throw CapacityError(
        fmt::format("{} qubits exceeds the dense cap of {}", n_qubits, kDenseCap));
}

/// Dense 2^n x 2^n matrix of a Pauli sum.
inline Matrix to_dense(const PauliSum& a) {
  check_dense_cap(a.n_qubits());
  const CompiledPauliSum k(a);
  const std::uint64_t d = k.dim();
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (const auto& e : k.entries()) {
    for (std::uint64_t b = 0; b < d; ++b) {
      const double sign = (std::popcount(b & e.z) & 1) ? -1.0 : 1.0;
      m(static_cast<Eigen::Index>(b ^ e.x), static_cast<Eigen::Index>(b)) += sign * e.weight;
    }
  }
  return m;
}

inline cplx expectation(const PauliSum& a, const StateVector& psi) {
  if (a.n_qubits() != psi.n_qubits())
    throw DimensionError(fmt::format("{}-qubit operator on a {}-qubit state", a.n_qubits(),
                                     psi.n_qubits()));
  return CompiledPauliSum(a).expectation(psi.amplitudes());
}

enum class NormMethod { trivial, dense_eigensolve, dense_svd, lanczos };

inline std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::trivial: return "trivial";
    case NormMethod::dense_eigensolve: return "dense_eigensolve";
    case NormMethod::dense_svd: return "dense_svd";
    case NormMethod::lanczos: return "lanczos";
  }
  return "unknown";
}

struct NormResult {
  double value;
  NormMethod method;
};

namespace detail {

// Largest |eigenvalue| of a Hermitian operator given as a matrix-free apply,
// from the extreme Ritz values of a plain three-term Lanczos recurrence.
template <typename Apply>
double lanczos_extreme_magnitude(Apply&& apply, std::size_t dim, int max_iter = 400,
                                 double rtol = 1e-14) {
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> gauss;
  const auto n = static_cast<Eigen::Index>(dim);
  Vector v(n);
  for (auto& x : v) x = {gauss(rng), gauss(rng)};
  v.normalize();
  Vector v_prev = Vector::Zero(n);
  std::vector<double> alpha, beta;
  double beta_prev = 0.0;
  double last = -1.0;
  for (int j = 0; j < max_iter; ++j) {
    Vector w = apply(v);
    const double a = std::real(v.dot(w));
    w -= a * v + beta_prev * v_prev;
    // One round of local reorthogonalization keeps the recurrence stable.
    w -= v.dot(w) * v;
    alpha.push_back(a);
    const double b = w.norm();

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(alpha.size()),
                                              static_cast<Eigen::Index>(alpha.size()));
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < alpha.size()) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double current = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    if (b < 1e-13 * std::max(1.0, current)) return current;  // invariant subspace
    if (j > 4 && std::abs(current - last) <= rtol * std::max(current, 1e-300)) return current;
    last = current;

    beta.push_back(b);
    v_prev = v;
    v = w / b;
    beta_prev = b;
  }
  throw ConvergenceError(fmt::format("Lanczos norm estimate did not converge in {} steps", max_iter));
}

}  // namespace detail

/// Largest singular value, with the evaluation path that produced it.
/// Dense eigensolve (or SVD for non-normal input) up to kDenseCap qubits,
/// Lanczos on the matrix-free kernel up to kMatrixFreeCap.
inline NormResult spectral_norm_with_method(const PauliSum& a) {
  if (a.empty()) return {0.0, NormMethod::trivial};
  if (a.size() == 1) return {std::abs(a.begin()->second), NormMethod::trivial};
  const bool hermitian = a.all_real();
  const bool anti_hermitian = a.all_imaginary();
  if (a.n_qubits() <= kDenseCap) {
    Matrix m = to_dense(a);
    if (hermitian || anti_hermitian) {
      if (anti_hermitian) m *= cplx(0.0, 1.0);
      Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      return {std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))),
              NormMethod::dense_eigensolve};
    }
    Eigen::BDCSVD<Matrix> svd(m);
    return {svd.singularValues()(0), NormMethod::dense_svd};
  }
  check_matrix_free_cap(a.n_qubits());
  const CompiledPauliSum k(a);
  if (hermitian || anti_hermitian) {
    const cplx rot = anti_hermitian ? cplx(0.0, 1.0) : cplx(1.0, 0.0);
    auto apply = [&](const Vector& v) {
      Vector out = Vector::Zero(v.size());
      k.apply_add(v, out, rot);
      return out;
    };
    return {detail::lanczos_extreme_magnitude(apply, k.dim()), NormMethod::lanczos};
  }
  const CompiledPauliSum kd = k.adjoint();
  auto apply = [&](const Vector& v) { return kd.apply(k.apply(v)); };
  return {std::sqrt(detail::lanczos_extreme_magnitude(apply, k.dim())), NormMethod::lanczos};
}

inline double spectral_norm(const PauliSum& a) { return spectral_norm_with_method(a).value; }

}  // namespace trotterbound
