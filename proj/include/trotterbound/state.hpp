#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "trotterbound/errors.hpp"
#include "trotterbound/pauli.hpp"

namespace trotterbound {

using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

/// Largest qubit count for dense 2^n x 2^n operator matrices.
inline constexpr std::size_t kDenseCap = 12;
/// Largest qubit count for matrix-free statevector work.
inline constexpr std::size_t kMatrixFreeCap = 16;
/// Largest qubit count for density-matrix simulation.
inline constexpr std::size_t kDensityCap = 10;

/// Allowed drift of a propagated state's norm away from one.
inline constexpr double kNormTolerance = 1e-10;

inline void check_matrix_free_cap(std::size_t n_qubits) {
  if (n_qubits > kMatrixFreeCap)
    throw CapacityError(
        fmt::format("{} qubits exceeds the matrix-free cap of {}", n_qubits, kMatrixFreeCap));
}

/// Pure state of n qubits. Never renormalized implicitly.
class StateVector {
 public:
  StateVector() = default;

  StateVector(std::size_t n_qubits, Vector amplitudes)
      : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
    check_matrix_free_cap(n_qubits);
    if (n_qubits == 0) throw ArgumentError("state needs at least one qubit");
    if (static_cast<std::size_t>(amps_.size()) != dim())
      throw DimensionError(fmt::format("{} amplitudes for {} qubits", amps_.size(), n_qubits));
  }

  /// Computational basis state |index>.
  static StateVector basis(std::size_t n_qubits, std::size_t index) {
    Vector v = Vector::Zero(Eigen::Index{1} << n_qubits);
    if (index >= static_cast<std::size_t>(v.size())) throw ArgumentError("basis index out of range");
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return {n_qubits, std::move(v)};
  }

  static StateVector all_zeros(std::size_t n_qubits) { return basis(n_qubits, 0); }

  /// |+...+>, ground state of -sum X.
  static StateVector plus_state(std::size_t n_qubits) {
    const auto d = Eigen::Index{1} << n_qubits;
    return {n_qubits, Vector::Constant(d, cplx(1.0 / std::sqrt(static_cast<double>(d)), 0.0))};
  }

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return std::size_t{1} << n_qubits_; }
  const Vector& amplitudes() const { return amps_; }
  Vector& amplitudes() { return amps_; }

  double norm() const { return amps_.norm(); }

  /// Throws NumericalHealthError when the norm has drifted beyond tolerance.
  void check_norm(double tol = kNormTolerance) const {
    const double drift = std::abs(norm() - 1.0);
    if (!(drift <= tol))
      throw NumericalHealthError(fmt::format("state norm drifted by {:.3e} (tolerance {:.1e})",
                                             drift, tol));
  }

  void check_same_size(const StateVector& other) const {
    if (other.n_qubits_ != n_qubits_)
      throw DimensionError(
          fmt::format("states on {} and {} qubits", n_qubits_, other.n_qubits_));
  }

 private:
  std::size_t n_qubits_ = 0;
  Vector amps_;
};

/// <a|b>
inline cplx overlap(const StateVector& a, const StateVector& b) {
  a.check_same_size(b);
  return a.amplitudes().dot(b.amplitudes());
}

/// Overlap magnitudes in (1, 1 + kOverlapSlack] are treated as one. Vectors
/// pass check_norm up to 1 + kNormTolerance, so their overlap may reach twice that.
inline constexpr double kOverlapSlack = 2.0 * kNormTolerance;

/// |<a|b>| clamped to one, raising when it exceeds one by more than roundoff.
inline double overlap_magnitude(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("overlap of mismatched vectors");
  const double mag = std::abs(a.dot(b));
  if (mag > 1.0 + kOverlapSlack)
    throw NumericalHealthError(fmt::format("overlap magnitude {:.17g} exceeds one", mag));
  return std::min(mag, 1.0);
}

/// Fubini-Study angle arccos|<a|b>| for unit vectors.
///
/// Evaluated as 2 asin(d/2) with d the phase-aligned chord |a - e^{i phi} b|,
/// which equals arccos|<a|b>| exactly but keeps full relative precision for
/// nearly parallel states where arccos loses half the digits.
inline double fubini_study_angle(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("Fubini-Study angle of mismatched vectors");
  const cplx ov = a.dot(b);
  const double mag = std::abs(ov);
  if (mag > 1.0 + kOverlapSlack)
    throw NumericalHealthError(fmt::format("overlap magnitude {:.17g} exceeds one", mag));
  const cplx phase = mag > 0.0 ? ov / mag : cplx{1.0, 0.0};
  // <a|b> = |ov| e^{i arg}, so b e^{-i arg} is phase-aligned with a.
  const double chord = (a - b * std::conj(phase)).norm();
  const double angle = 2.0 * std::asin(std::min(1.0, chord / 2.0));
  return std::min(angle, std::numbers::pi / 2);
}

inline double fubini_study_angle(const StateVector& a, const StateVector& b) {
  a.check_same_size(b);
  return fubini_study_angle(a.amplitudes(), b.amplitudes());
}

// Binary dump: 16-byte header then little-endian float64 (re, im) pairs.
//   bytes 0-7   magic "TBSTATE\0"
//   bytes 8-11  uint32 format version (1)
//   bytes 12-15 uint32 qubit count
inline constexpr std::array<char, 8> kStateMagic{'T', 'B', 'S', 'T', 'A', 'T', 'E', '\0'};
inline constexpr std::uint32_t kStateFormatVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts unsupported");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ArgumentError("truncated state dump");
  return value;
}

}  // namespace detail

inline void write_state(std::ostream& os, const StateVector& psi) {
  os.write(kStateMagic.data(), kStateMagic.size());
  detail::put_le<std::uint32_t>(os, kStateFormatVersion);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(psi.n_qubits()));
  for (const cplx& a : psi.amplitudes()) {
    detail::put_le<double>(os, a.real());
    detail::put_le<double>(os, a.imag());
  }
}

inline StateVector read_state(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kStateMagic) throw ArgumentError("not a state dump (bad magic)");
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kStateFormatVersion)
    throw ArgumentError(fmt::format("unsupported state dump version {}", version));
  const auto n = detail::get_le<std::uint32_t>(is);
  check_matrix_free_cap(n);
  if (n == 0) throw ArgumentError("state dump with zero qubits");
  Vector v(Eigen::Index{1} << n);
  for (auto& a : v) {
    const double re = detail::get_le<double>(is);
    const double im = detail::get_le<double>(is);
    a = {re, im};
  }
  return {n, std::move(v)};
}

}  // namespace trotterbound
