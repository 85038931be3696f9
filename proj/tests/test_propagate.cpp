#include <random>

#include <gtest/gtest.h>

#include "dense_oracle.hpp"
#include "trotterbound/krylov.hpp"
#include "trotterbound/propagate.hpp"

using namespace trotterbound;

namespace {

PauliString ps(const char* s) { return PauliString::parse(s); }

StateVector random_state(std::mt19937& rng, std::size_t n) {
  std::normal_distribution<double> g;
  Vector v(Eigen::Index{1} << n);
  for (auto& a : v) a = {g(rng), g(rng)};
  return {n, v / v.norm()};
}

GroupedHamiltonian single_group(std::size_t n, PauliSum base, double T, ScheduleFn f) {
  std::vector<HamiltonianGroup> gs;
  gs.emplace_back(std::move(f), std::move(base));
  return {n, T, std::move(gs)};
}

PauliSum heisenberg_ring(std::size_t L) {
  PauliSum out(L);
  for (std::size_t i = 0; i < L; ++i)
    for (Pauli p : {Pauli::X, Pauli::Y, Pauli::Z}) {
      PauliString s(L);
      s.set(i, p);
      s.set((i + 1) % L, p);
      out += PauliSum::from_string(0.3 + 0.1 * i, s);
    }
  out += PauliSum::from_string(0.7, PauliString::single(L, 0, Pauli::X));
  return out;
}

}  // namespace

TEST(GroupExponential, ZeroAngleIsIdentity) {
  std::mt19937 rng(1);
  const auto h = build_tfi_annealing(3, 1.0);
  const auto psi = random_state(rng, 3);
  EXPECT_EQ(apply_group_exponential(psi, h.group(0), 0.0).amplitudes(), psi.amplitudes());
}

TEST(GroupExponential, QuarterTurnOfX) {
  const HamiltonianGroup g(ScheduleFn::constant(1.0, 1.0), PauliSum::from_string(1.0, PauliString::single(1, 0, Pauli::X)));
  const auto out = apply_group_exponential(StateVector::all_zeros(1), g, M_PI / 2);
  EXPECT_LT(std::abs(out.amplitudes()(0)), 1e-16);
  EXPECT_LT(std::abs(out.amplitudes()(1) - cplx(0, -1)), 1e-15);
}

TEST(GroupExponential, MatchesDenseExpm) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  const auto h = build_tfi_annealing(3, 1.0);
  const oracle::Tfi o(3, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto psi = random_state(rng, 3);
    const double theta = u(rng);
    const Vector zz = apply_group_exponential(psi, h.group(0), theta).amplitudes();
    EXPECT_LT((zz - oracle::expm_i(o.hzz, theta) * psi.amplitudes()).norm(), 1e-13);
    const Vector x = apply_group_exponential(psi, h.group(1), theta).amplitudes();
    EXPECT_LT((x - oracle::expm_i(o.hx, theta) * psi.amplitudes()).norm(), 1e-13);
  }
}

TEST(GroupExponential, YTermsAndNonCommutingGroups) {
  std::mt19937 rng(9);
  PauliSum ys = PauliSum::from_string(0.4, ps("YZI")) + PauliSum::from_string(-0.9, ps("ZYY")) +
                PauliSum::from_string(1.1, ps("IIY"));
  ASSERT_TRUE(HamiltonianGroup::strings_commute(ys));
  const auto psi = random_state(rng, 3);
  oracle::Mat dy = 0.4 * oracle::string_matrix("YZI") - 0.9 * oracle::string_matrix("ZYY") +
                   1.1 * oracle::string_matrix("IIY");
  const HamiltonianGroup gy(ScheduleFn::constant(1.0, 1.0), ys);
  EXPECT_LT((apply_group_exponential(psi, gy, 0.8).amplitudes() - oracle::expm_i(dy, 0.8) * psi.amplitudes()).norm(),
            1e-13);

  const auto ring = heisenberg_ring(4);
  const HamiltonianGroup gr(ScheduleFn::constant(1.0, 1.0), ring);
  ASSERT_FALSE(gr.internally_commuting());
  oracle::Mat dr = oracle::Mat::Zero(16, 16);
  for (const auto& [s, c] : ring) dr += c * oracle::string_matrix(s.str());
  const auto psi4 = random_state(rng, 4);
  for (double theta : {0.05, 1.0, 7.5})
    EXPECT_LT((apply_group_exponential(psi4, gr, theta).amplitudes() - oracle::expm_i(dr, theta) * psi4.amplitudes())
                  .norm(),
              1e-12);
}

TEST(Krylov, LongTimeAndZeroVector) {
  std::mt19937 rng(3);
  const auto ring = heisenberg_ring(6);
  const CompiledPauliSum k(ring);
  const Matrix d = to_dense(ring);
  const auto psi = random_state(rng, 6);
  auto apply = [&](const Vector& x) { return k.apply(x); };
  const Vector out = expm_hermitian_apply(apply, psi.amplitudes(), 25.0);
  EXPECT_LT((out - oracle::expm_i(d, 25.0) * psi.amplitudes()).norm(), 1e-11);
  const Vector z = Vector::Zero(64);
  EXPECT_EQ(expm_hermitian_apply(apply, z, 1.0), z);
}

TEST(TrotterStep, MatchesDenseProduct) {
  const auto h = build_tfi_annealing(3, 1.0);
  const oracle::Tfi o(3, 1.0);
  const TrotterPlan plan(h, 4);
  const auto psi = StateVector::plus_state(3);
  for (std::size_t m = 1; m <= 4; ++m) {
    const Vector got = trotter_step(psi, plan, m).amplitudes();
    EXPECT_LT((got - o.trotter_slice(m, 4) * oracle::plus_state(3)).norm(), 1e-13) << m;
  }
}

TEST(TrotterStep, AdjointInverts) {
  std::mt19937 rng(2);
  const auto h = build_tfi_annealing(4, 2.0);
  const TrotterPlan plan(h, 5);
  const auto psi = random_state(rng, 4);
  const auto back = trotter_step_adjoint(trotter_step(psi, plan, 3), plan, 3);
  EXPECT_LT((back.amplitudes() - psi.amplitudes()).norm(), 1e-13);
}

TEST(TrotterStep, SingleGroupIsExact) {
  std::mt19937 rng(4);
  const auto ring = heisenberg_ring(3);
  const auto h = single_group(3, ring, 1.5, ScheduleFn::linear_ramp(0.2, 1.0, 1.5));
  const TrotterPlan plan(h, 3);
  const auto psi = random_state(rng, 3);
  for (std::size_t m = 1; m <= 3; ++m)
    EXPECT_LT((trotter_step(psi, plan, m).amplitudes() - slice_exact_step(psi, h, m, 3).amplitudes()).norm(), 1e-12);
}

TEST(TrotterStep, NonCommutativityWitness) {
  const auto h = build_tfi_annealing(3, 1.0);
  const auto psi = StateVector::plus_state(3);
  std::vector<HamiltonianGroup> gs;
  gs.emplace_back(ScheduleFn::constant(-1.0, 1.0), h.group(0).base());
  gs.emplace_back(ScheduleFn::constant(-1.0, 1.0), h.group(1).base());
  const GroupedHamiltonian hc(3, 1.0, std::move(gs));
  const auto one = trotter_trajectory(psi, TrotterPlan(hc, 1)).back();
  const auto two = trotter_trajectory(psi, TrotterPlan(hc, 2)).back();
  EXPECT_GT((one.amplitudes() - two.amplitudes()).norm(), 1e-3);
}

TEST(TrotterStep, Errors) {
  const auto h = build_tfi_annealing(3, 1.0);
  const TrotterPlan plan(h, 4);
  EXPECT_THROW(trotter_step(StateVector::plus_state(4), plan, 1), DimensionError);
  EXPECT_THROW(trotter_step(StateVector::plus_state(3), plan, 0), ArgumentError);
  EXPECT_THROW(trotter_step(StateVector::plus_state(3), plan, 5), ArgumentError);
  EXPECT_THROW(TrotterPlan(h, 0), ArgumentError);
  StateVector bad(3, Vector::Constant(8, 1.0));
  EXPECT_THROW(trotter_step(bad, plan, 1), NumericalHealthError);
}

TEST(SliceExact, CommutingGroupsEqualTrotter) {
  std::mt19937 rng(5);
  std::vector<HamiltonianGroup> gs;
  gs.emplace_back(ScheduleFn::linear_ramp(1, -1, 1.0), PauliSum::from_string(1.0, ps("ZZI")));
  gs.emplace_back(ScheduleFn::linear_ramp(0, 2, 1.0), PauliSum::from_string(1.0, ps("IZZ")));
  const GroupedHamiltonian h(3, 1.0, std::move(gs));
  const TrotterPlan plan(h, 3);
  const auto psi = random_state(rng, 3);
  for (std::size_t m = 1; m <= 3; ++m)
    EXPECT_LT((trotter_step(psi, plan, m).amplitudes() - slice_exact_step(psi, h, m, 3).amplitudes()).norm(), 1e-13);
}

TEST(SliceExact, ZeroHamiltonianAndDenseOracle) {
  std::mt19937 rng(6);
  const auto h0 = single_group(2, PauliSum::from_string(1.0, ps("XX")), 1.0, ScheduleFn::constant(0.0, 1.0));
  const auto psi2 = random_state(rng, 2);
  EXPECT_EQ(slice_exact_step(psi2, h0, 1, 2).amplitudes(), psi2.amplitudes());

  const auto h = build_tfi_annealing(3, 2.0);
  const oracle::Tfi o(3, 2.0);
  const auto psi = random_state(rng, 3);
  for (std::size_t m : {1u, 3u, 6u})
    EXPECT_LT((slice_exact_step(psi, h, m, 7).amplitudes() - o.frozen_slice(m, 7) * psi.amplitudes()).norm(), 1e-11);
}

TEST(Reference, TimeIndependentAgreesWithSingleExponential) {
  std::mt19937 rng(8);
  const auto ring = heisenberg_ring(3);
  const auto h = single_group(3, ring, 2.0, ScheduleFn::constant(1.3, 2.0));
  oracle::Mat d = oracle::Mat::Zero(8, 8);
  for (const auto& [s, c] : ring) d += c * oracle::string_matrix(s.str());
  const auto psi = random_state(rng, 3);
  const auto r = reference_evolve(h, psi, 1e-12);
  EXPECT_LT((r.state.amplitudes() - oracle::expm_i(1.3 * d, 2.0) * psi.amplitudes()).norm(), 1e-11);
  ReferenceOptions opt;
  opt.aligned_slices = 5;
  const auto r5 = reference_evolve(h, psi, 1e-12, opt);
  EXPECT_LT((r5.state.amplitudes() - oracle::expm_i(1.3 * d, 2.0) * psi.amplitudes()).norm(), 1e-11);
}

TEST(Reference, TerminationContract) {
  const auto h = build_tfi_annealing(3, 1.0);
  const auto r = reference_evolve(h, StateVector::plus_state(3), 1e-12);
  EXPECT_LE(r.deviation, 1e-12);
  EXPECT_GE(r.refinements, 1);
  EXPECT_EQ(r.total_slices, r.subdivisions);
  ReferenceOptions tight;
  tight.max_subdivisions = 4;
  EXPECT_THROW(reference_evolve(h, StateVector::plus_state(3), 1e-20, tight), ConvergenceError);
  EXPECT_THROW(reference_evolve(h, StateVector::plus_state(3), 0.0), ArgumentError);
}

TEST(Reference, MatchesIndependentIntegrator) {
  const auto h = build_tfi_annealing(3, 2.0);
  const oracle::Tfi o(3, 2.0);
  const auto r = reference_evolve(h, StateVector::plus_state(3), 1e-19);
  oracle::Vec v = oracle::plus_state(3);
  v = o.exact_slice(1, 1, 2048) * v;
  EXPECT_LT((r.state.amplitudes() - v).norm(), 1e-9);
}

TEST(Reference, AlignedSliceReferenceMatchesOracle) {
  const auto h = build_tfi_annealing(3, 1.0);
  const oracle::Tfi o(3, 1.0);
  const std::size_t M = 4;
  ReferenceOptions opt;
  opt.aligned_slices = M;
  const auto r = reference_evolve(h, StateVector::plus_state(3), 1e-20, opt);
  oracle::Vec v = oracle::plus_state(3);
  for (std::size_t n = 1; n <= M; ++n) v = o.exact_slice(n, M) * v;
  EXPECT_LT((r.state.amplitudes() - v).norm(), 1e-10);
}
