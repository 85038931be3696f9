#include <random>

#include <gtest/gtest.h>

#include "dense_oracle.hpp"
#include "trotterbound/hamiltonian.hpp"
#include "trotterbound/operator.hpp"

using namespace trotterbound;

namespace {

PauliString ps(const char* s) { return PauliString::parse(s); }

Matrix dense_H(const oracle::Tfi& t, double time) { return t.H(time); }

}  // namespace

TEST(Schedule, Kinds) {
  const auto c = ScheduleFn::constant(0.7, 2.0);
  EXPECT_EQ(c(0.0), 0.7);
  EXPECT_EQ(c(2.0), 0.7);
  const auto r = ScheduleFn::linear_ramp(-1.0, 1.0, 4.0);
  EXPECT_DOUBLE_EQ(r(0.0), -1.0);
  EXPECT_DOUBLE_EQ(r(1.0), -0.75);
  EXPECT_DOUBLE_EQ(r(4.0), 0.0);
  // Two pieces: 1 + t on [0, 1), then 2 - 2(t - 1) + (t - 1)^2 on [1, 3].
  const auto p = ScheduleFn::piecewise_polynomial({0.0, 1.0, 3.0}, {{1.0, 1.0}, {2.0, -2.0, 1.0}}, 3.0);
  EXPECT_DOUBLE_EQ(p(0.5), 1.5);
  EXPECT_DOUBLE_EQ(p(1.0), 2.0);
  EXPECT_DOUBLE_EQ(p(3.0), 2.0 - 4.0 + 4.0);
  EXPECT_DOUBLE_EQ(r.scaled(2.0)(1.0), -1.5);
}

TEST(Schedule, Validation) {
  EXPECT_THROW(ScheduleFn::constant(1.0, 0.0), ArgumentError);
  EXPECT_THROW(ScheduleFn::piecewise_polynomial({0.0, 2.0, 1.0}, {{1.0}, {1.0}}, 1.0), ArgumentError);
  EXPECT_THROW(ScheduleFn::piecewise_polynomial({0.0, 0.5}, {{1.0}}, 1.0), ArgumentError);
  EXPECT_THROW(ScheduleFn::piecewise_polynomial({0.0, 1.0}, {{1.0}, {2.0}}, 1.0), ArgumentError);
}

TEST(Tfi, GroupCounts) {
  const auto h = build_tfi_annealing(4, 2.0);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h.group(0).base().size(), 4u);
  EXPECT_EQ(h.group(1).base().size(), 4u);
  EXPECT_TRUE(h.group(0).internally_commuting());
  EXPECT_TRUE(h.group(1).internally_commuting());
  EXPECT_EQ(build_tfi_annealing(4, 2.0, false).group(0).base().size(), 3u);
}

TEST(Tfi, Endpoints) {
  const auto h = build_tfi_annealing(3, 1.0);
  const auto h0 = h.evaluate(0.0);
  for (const auto& [s, c] : h0) {
    EXPECT_EQ(c, cplx(-1.0, 0.0));
    EXPECT_EQ(s.x_mask() != 0, true);
  }
  EXPECT_EQ(h0.size(), 3u);
  const auto h1 = h.evaluate(1.0);
  EXPECT_EQ(h1.size(), 3u);
  for (const auto& [s, c] : h1) {
    EXPECT_EQ(c, cplx(-1.0, 0.0));
    EXPECT_EQ(s.x_mask(), 0u);
  }
}

TEST(Tfi, MidpointAndQuarter) {
  const auto h = build_tfi_annealing(3, 2.0);
  for (const auto& [s, c] : h.evaluate(1.0)) EXPECT_DOUBLE_EQ(c.real(), -0.5);
  const oracle::Tfi o(3, 2.0);
  EXPECT_LT((to_dense(h.evaluate(0.5)) - dense_H(o, 0.5)).norm(), 1e-14);
  const oracle::Mat want = -0.25 * o.hzz - 0.75 * o.hx;
  EXPECT_LT((to_dense(h.evaluate(0.5)) - want).norm(), 1e-14);
}

TEST(Tfi, InvalidArguments) {
  EXPECT_THROW(build_tfi_annealing(2, 1.0), ArgumentError);
  EXPECT_NO_THROW(build_tfi_annealing(2, 1.0, false));
  EXPECT_THROW(build_tfi_annealing(4, -1.0), ArgumentError);
  EXPECT_THROW(build_tfi_annealing(17, 1.0), CapacityError);
  const auto h = build_tfi_annealing(3, 1.0);
  EXPECT_THROW(h.evaluate(1.5), ArgumentError);
  EXPECT_NO_THROW(h.evaluate(1.0 + 1e-14));
}

TEST(Group, Validation) {
  const auto sched = ScheduleFn::constant(1.0, 1.0);
  EXPECT_THROW(HamiltonianGroup(sched, PauliSum::from_string(cplx(0, 1), ps("XX"))), ArgumentError);
  PauliSum mixed = PauliSum::from_string(1.0, ps("XI")) + PauliSum::from_string(1.0, ps("ZI"));
  EXPECT_THROW(HamiltonianGroup(sched, mixed, true), ArgumentError);
  EXPECT_FALSE(HamiltonianGroup(sched, mixed).internally_commuting());
  EXPECT_THROW(GroupedHamiltonian(2, 1.0, {}), ArgumentError);
  EXPECT_THROW(GroupedHamiltonian(3, 1.0, {HamiltonianGroup(sched, mixed)}), DimensionError);
  EXPECT_THROW(GroupedHamiltonian(2, 2.0, {HamiltonianGroup(sched, mixed)}), ArgumentError);
}

TEST(Group, ZeroScheduleContributesNothing) {
  std::vector<HamiltonianGroup> gs;
  gs.emplace_back(ScheduleFn::constant(0.0, 1.0), PauliSum::from_string(1.0, ps("XX")));
  gs.emplace_back(ScheduleFn::constant(2.0, 1.0), PauliSum::from_string(1.0, ps("ZI")));
  const GroupedHamiltonian h(2, 1.0, std::move(gs));
  const auto e = h.evaluate(0.3);
  EXPECT_EQ(e.size(), 1u);
  EXPECT_EQ(e.coefficient(ps("ZI")), cplx(2.0, 0));
}

TEST(CrossCommutator, EmptyCases) {
  std::vector<HamiltonianGroup> one;
  one.emplace_back(ScheduleFn::constant(1.0, 1.0),
                   PauliSum::from_string(1.0, ps("XI")) + PauliSum::from_string(1.0, ps("ZZ")));
  EXPECT_TRUE(GroupedHamiltonian(2, 1.0, std::move(one)).cross_commutator_A(0.5).empty());

  std::vector<HamiltonianGroup> diag;
  diag.emplace_back(ScheduleFn::linear_ramp(0, 1, 1.0), PauliSum::from_string(1.0, ps("ZZ")));
  diag.emplace_back(ScheduleFn::linear_ramp(1, -1, 1.0), PauliSum::from_string(1.0, ps("IZ")));
  EXPECT_TRUE(GroupedHamiltonian(2, 1.0, std::move(diag)).cross_commutator_A(0.5).empty());
}

TEST(CrossCommutator, TfiClosedForm) {
  std::mt19937 rng(42);
  for (std::size_t L : {3u, 5u, 8u}) {
    const double T = 3.0;
    const auto h = build_tfi_annealing(L, T);
    const auto shape = tfi_commutator_shape(L);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t M = 1 + rng() % 50;
      const std::size_t n = rng() % (M + 1);
      const double x = static_cast<double>(n) / M;
      const auto a = h.cross_commutator_A(T * x);
      if (n == 0 || n == M) {
        EXPECT_TRUE(a.empty());
        continue;
      }
      // Fixed convention: A = -2i x (1 - x) sum (YZ + ZY).
      const auto diff = a - shape * cplx(0.0, -2.0 * x * (1.0 - x));
      EXPECT_LE(diff.one_norm(), 1e-14) << "L=" << L << " n=" << n << " M=" << M;
      EXPECT_TRUE(a.all_imaginary());
    }
  }
}

TEST(CrossCommutator, MatchesDenseCommutator) {
  const auto h = build_tfi_annealing(3, 2.0);
  const oracle::Tfi o(3, 2.0);
  for (double t : {0.1, 0.7, 1.3}) {
    const auto ha = h.group(0).base() * cplx(h.schedule_values(t)[0]);
    EXPECT_LT((to_dense(h.cross_commutator_A(t)) - o.A(t)).norm(), 1e-13);
    EXPECT_LT((to_dense(commutator(h.group(1).base() * cplx(h.schedule_values(t)[1]), ha)) - o.A(t)).norm(),
              1e-13);
  }
  // [H_ZZ, H_X] for the spec ordering has the opposite sign.
  const auto c = commutator(h.group(0).base(), h.group(1).base());
  EXPECT_LE((c - tfi_commutator_shape(3) * cplx(0, 2)).one_norm(), 1e-14);
}

TEST(CrossCommutator, Antihermitian) {
  const auto h = build_tfi_annealing(4, 1.0);
  const Matrix a = to_dense(h.cross_commutator_A(0.3));
  EXPECT_LT((a + a.adjoint()).norm(), 1e-13);
}

TEST(Hamiltonian, Scaled) {
  const auto h = build_tfi_annealing(3, 1.0).scaled(2.0);
  for (const auto& [s, c] : h.evaluate(0.5)) EXPECT_DOUBLE_EQ(c.real(), -1.0);
}
