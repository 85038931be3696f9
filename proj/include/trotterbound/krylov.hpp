#pragma once

// Action of exp(-i tau H) on a vector for Hermitian H given matrix-free.
// Lanczos projection with a posteriori error control; when 30 basis vectors
// are not enough the step is split and the projection restarted.

#include <cmath>
#include <limits>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "trotterbound/errors.hpp"
#include "trotterbound/state.hpp"

namespace trotterbound {

struct KrylovOptions {
  int max_dim = 30;
  double tol = 1e-15;  // absolute error budget for the whole step
  int max_substeps = 1 << 20;
};

namespace detail {

// exp(-i tau T) e_1 for real symmetric tridiagonal T given by its diagonal
// and off-diagonal.
inline Vector expm_tridiag_e1(const std::vector<double>& alpha, const std::vector<double>& beta,
                              double tau) {
  const auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    t(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const auto& q = es.eigenvectors();
  const auto& ev = es.eigenvalues();
  Vector out = Vector::Zero(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const cplx phase = std::exp(cplx(0.0, -tau * ev(k)));
    out += (phase * q(0, k)) * q.col(k).cast<cplx>();
  }
  return out;
}

}  // namespace detail

/// exp(-i tau H) v. `apply(x)` must return H x for Hermitian H.
template <typename Apply>
Vector expm_hermitian_apply(Apply&& apply, const Vector& v, double tau,
                            const KrylovOptions& opt = {}) {
  if (tau == 0.0) return v;
  Vector w = v;
  double remaining = tau;
  double h = tau;
  int substeps = 0;
  const double total = std::abs(tau);

  while (remaining != 0.0) {
    if (++substeps > opt.max_substeps)
      throw ConvergenceError("Krylov exponential exceeded its substep budget");
    const double beta0 = w.norm();
    if (beta0 == 0.0) return w;

    std::vector<Vector> basis;
    std::vector<double> alpha, beta;
    basis.push_back(w / beta0);
    if (std::abs(h) > std::abs(remaining)) h = remaining;

    bool done = false;
    for (int j = 0; j < opt.max_dim && !done; ++j) {
      Vector u = apply(basis.back());
      alpha.push_back(std::real(basis.back().dot(u)));
      // Full reorthogonalization (classical Gram-Schmidt, twice).
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) u -= q.dot(u) * q;
      const double b = u.norm();
      const bool breakdown = b <= 1e-14 * std::max(1.0, std::abs(alpha.back()));

      // Shrink h until the estimate fits this step's share of the budget.
      while (true) {
        const Vector y = detail::expm_tridiag_e1(alpha, beta, h);
        const double err = breakdown ? 0.0 : beta0 * b * std::abs(y(y.size() - 1));
        // The estimate bottoms out at roundoff, which halving h cannot reduce.
        const double budget = std::max(opt.tol * std::abs(h) / total,
                                       4.0 * std::numeric_limits<double>::epsilon() * beta0);
        if (err <= budget) {
          Vector next = Vector::Zero(w.size());
          for (std::size_t k = 0; k < basis.size(); ++k) next += y(static_cast<Eigen::Index>(k)) * basis[k];
          w = beta0 * next;
          const double used = h;
          remaining = std::abs(remaining - used) <= 1e-15 * total ? 0.0 : remaining - used;
          h = std::abs(2.0 * used) < std::abs(remaining) ? 2.0 * used : remaining;
          done = true;
          break;
        }
        if (j + 1 < opt.max_dim && !breakdown) break;  // enlarge the basis first
        h *= 0.5;
        if (std::abs(h) < 1e-300) throw ConvergenceError("Krylov step size underflow");
      }
      if (!done) {
        beta.push_back(b);
        basis.push_back(u / b);
      }
    }
  }
  return w;
}

}  // namespace trotterbound
