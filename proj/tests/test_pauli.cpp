#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dense_oracle.hpp"
#include "trotterbound/operator.hpp"
#include "trotterbound/pauli.hpp"
#include "trotterbound/state.hpp"

using namespace trotterbound;

namespace {

PauliString ps(const char* s) { return PauliString::parse(s); }

PauliSum random_sum(std::mt19937& rng, std::size_t n, int terms) {
  std::uniform_int_distribution<int> letter(0, 3);
  std::normal_distribution<double> g;
  PauliSum out(n);
  for (int k = 0; k < terms; ++k) {
    PauliString s(n);
    for (std::size_t i = 0; i < n; ++i) s.set(i, static_cast<Pauli>(letter(rng)));
    out += PauliSum::from_string(cplx(g(rng), g(rng)), s);
  }
  return out;
}

Vector random_state(std::mt19937& rng, std::size_t n) {
  std::normal_distribution<double> g;
  Vector v(Eigen::Index{1} << n);
  for (auto& a : v) a = {g(rng), g(rng)};
  return v / v.norm();
}

}  // namespace

TEST(PauliString, ParseAndPrint) {
  EXPECT_EQ(ps("XYZI").str(), "XYZI");
  EXPECT_THROW(ps("xyzi"), ArgumentError);
  EXPECT_THROW(ps("XQ"), ArgumentError);
  EXPECT_THROW(ps(""), ArgumentError);
}

TEST(PauliString, Masks) {
  // Letter 0 is the most significant bit.
  const auto s = ps("XYZ");
  EXPECT_EQ(s.x_mask(), 0b110u);
  EXPECT_EQ(s.z_mask(), 0b011u);
  EXPECT_EQ(s.y_count(), 1);
}

TEST(PauliString, InvolutionProduct) {
  const auto r = multiply_strings(ps("IX"), ps("IX"));
  EXPECT_EQ(r.phase, cplx(1, 0));
  EXPECT_EQ(r.product.str(), "II");
}

TEST(PauliString, ProductPhaseMatchesDense) {
  const auto r1 = multiply_strings(ps("ZZ"), ps("XI"));
  EXPECT_EQ(r1.phase, cplx(0, 1));
  EXPECT_EQ(r1.product.str(), "YZ");
  const auto r2 = multiply_strings(ps("XI"), ps("ZZ"));
  EXPECT_EQ(r2.phase, cplx(0, -1));
  EXPECT_EQ(r2.product.str(), "YZ");

  const oracle::Mat lhs = oracle::string_matrix("ZZ") * oracle::string_matrix("XI");
  EXPECT_LT((lhs - cplx(0, 1) * oracle::string_matrix("YZ")).norm(), 1e-15);
  const oracle::Mat rhs = oracle::string_matrix("XI") * oracle::string_matrix("ZZ");
  EXPECT_LT((rhs - cplx(0, -1) * oracle::string_matrix("YZ")).norm(), 1e-15);
}

TEST(PauliString, AllSingleSiteProductsMatchDense) {
  const char* letters = "IXYZ";
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const std::string sa(1, letters[a]), sb(1, letters[b]);
      const auto r = multiply_strings(ps(sa.c_str()), ps(sb.c_str()));
      const oracle::Mat want = oracle::pauli(letters[a]) * oracle::pauli(letters[b]);
      EXPECT_LT((want - r.phase * oracle::string_matrix(r.product.str())).norm(), 1e-15) << sa << sb;
    }
}

TEST(PauliString, SizeMismatch) {
  EXPECT_THROW(multiply_strings(ps("X"), ps("XX")), DimensionError);
}

TEST(PauliSum, CanonicalFormMergesAndPrunes) {
  PauliSum a(2);
  a += PauliSum::from_string(1.0, ps("XZ"));
  a += PauliSum::from_string(-1.0, ps("XZ"));
  EXPECT_TRUE(a.empty());
  a += PauliSum::from_string(1e-15, ps("YY"));
  EXPECT_TRUE(a.empty());
  a += PauliSum::from_string(2.0, ps("ZI"));
  a += PauliSum::from_string(0.5, ps("ZI"));
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(a.coefficient(ps("ZI")), cplx(2.5, 0));
}

TEST(Commutator, SelfCommutatorVanishes) {
  const auto zz = PauliSum::from_string(1.0, ps("ZZ"));
  EXPECT_TRUE(commutator(zz, zz).empty());
}

TEST(Commutator, ZZWithX) {
  const auto c = commutator(PauliSum::from_string(1.0, ps("ZZ")), PauliSum::from_string(1.0, ps("XI")));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.coefficient(ps("YZ")), cplx(0, 2));
}

TEST(Commutator, AntisymmetryAndDenseAgreement) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const auto a = random_sum(rng, n, 5);
    const auto b = random_sum(rng, n, 5);
    const auto ab = commutator(a, b);
    EXPECT_TRUE((ab + commutator(b, a)).empty());
    const Matrix da = to_dense(a), db = to_dense(b);
    EXPECT_LT((to_dense(ab) - (da * db - db * da)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Commutator, SizeMismatch) {
  EXPECT_THROW(commutator(PauliSum(2), PauliSum(3)), DimensionError);
}

TEST(ToDense, Definitions) {
  EXPECT_EQ(to_dense(PauliSum(2)), Matrix::Zero(4, 4));
  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  EXPECT_EQ(to_dense(PauliSum::from_string(1.0, ps("X"))), x);
  Matrix zz = Matrix::Zero(4, 4);
  zz.diagonal() << 0.5, -0.5, -0.5, 0.5;
  EXPECT_EQ(to_dense(PauliSum::from_string(0.5, ps("ZZ"))), zz);
}

TEST(ToDense, MatchesKroneckerOracle) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_sum(rng, 3, 6);
    oracle::Mat want = oracle::Mat::Zero(8, 8);
    for (const auto& [s, c] : a) want += c * oracle::string_matrix(s.str());
    EXPECT_LT((to_dense(a) - want).norm(), 1e-13);
  }
}

TEST(ToDense, CapacityLimit) {
  EXPECT_THROW(to_dense(PauliSum(kDenseCap + 1)), CapacityError);
}

TEST(Compiled, ApplyAndAdjointMatchDense) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_sum(rng, 4, 7);
    const Vector v = random_state(rng, 4);
    const CompiledPauliSum k(a);
    const Matrix d = to_dense(a);
    EXPECT_LT((k.apply(v) - d * v).norm(), 1e-12);
    EXPECT_LT((k.adjoint().apply(v) - d.adjoint() * v).norm(), 1e-12);
  }
}

TEST(SpectralNorm, Trivial) {
  EXPECT_DOUBLE_EQ(spectral_norm(PauliSum::from_string(1.0, ps("X"))), 1.0);
  EXPECT_DOUBLE_EQ(spectral_norm(PauliSum::from_string(cplx(3, 4), ps("XYZ"))), 5.0);
  EXPECT_EQ(spectral_norm(PauliSum(3)), 0.0);
}

TEST(SpectralNorm, CommutatorShapeMatchesEigensolve) {
  PauliSum s(4);
  for (std::size_t i = 0; i < 4; ++i) {
    PauliString yz(4), zy(4);
    yz.set(i, Pauli::Y);
    yz.set((i + 1) % 4, Pauli::Z);
    zy.set(i, Pauli::Z);
    zy.set((i + 1) % 4, Pauli::Y);
    s += PauliSum::from_string(1.0, yz) + PauliSum::from_string(1.0, zy);
  }
  Eigen::SelfAdjointEigenSolver<oracle::Mat> es(oracle::yz_plus_zy(4, true));
  const double want = es.eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_NEAR(spectral_norm(s), want, 1e-12);
  EXPECT_NEAR(spectral_norm(s * cplx(0, 2)), 2 * want, 1e-12);
}

TEST(SpectralNorm, GeneralMatchesSvdAndLanczos) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_sum(rng, 4, 6);
    const auto r = spectral_norm_with_method(a);
    EXPECT_NEAR(r.value, oracle::spectral_norm(to_dense(a)), 1e-10);
  }
  // Matrix-free path beyond the dense cap.
  PauliSum big(13);
  for (std::size_t i = 0; i + 1 < 13; ++i) {
    PauliString s(13);
    s.set(i, Pauli::Z);
    s.set(i + 1, Pauli::Z);
    big += PauliSum::from_string(1.0, s);
  }
  big += PauliSum::from_string(1.0, PauliString::single(13, 0, Pauli::X));
  const auto r = spectral_norm_with_method(big);
  EXPECT_EQ(r.method, NormMethod::lanczos);
  // Z-chain ground energy magnitude is 12; the X term perturbs it upward.
  EXPECT_GE(r.value, 12.0 - 1e-9);
  EXPECT_LE(r.value, 13.0);
}

TEST(Expectation, BasisStates) {
  const auto z0 = StateVector::all_zeros(1);
  EXPECT_EQ(expectation(PauliSum::from_string(1.0, ps("Z")), z0), cplx(1, 0));
  EXPECT_EQ(expectation(PauliSum::from_string(1.0, ps("X")), z0), cplx(0, 0));
}

TEST(Expectation, MatchesDenseQuadraticForm) {
  std::mt19937 rng(2);
  const auto a = PauliSum::from_string(cplx(0, 2), ps("YZ"));
  const Vector v = random_state(rng, 2);
  const cplx want = v.dot(oracle::string_matrix("YZ") * v) * cplx(0, 2);
  EXPECT_LT(std::abs(expectation(a, StateVector(2, v)) - want), 1e-14);
}

TEST(Expectation, BoundedByNorm) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_sum(rng, 3, 4);
    const StateVector psi(3, random_state(rng, 3));
    EXPECT_LE(std::abs(expectation(a, psi)), spectral_norm(a) + 1e-12);
  }
}

TEST(TextFormat, RoundTrip) {
  std::mt19937 rng(9);
  const auto a = random_sum(rng, 5, 8);
  const auto b = parse_pauli_sum(to_text(a));
  EXPECT_EQ(a, b);
  EXPECT_EQ(parse_pauli_sum("0 2.0 YZI\n").coefficient(ps("YZI")), cplx(0, 2));
  EXPECT_EQ(parse_pauli_sum("# comment\n\n1 0 XX\n").size(), 1u);
  EXPECT_THROW(parse_pauli_sum("1 0 XX\n1 0 XXX\n"), DimensionError);
  EXPECT_THROW(parse_pauli_sum("1 XX\n"), ArgumentError);
  EXPECT_THROW(parse_pauli_sum("garbage\n"), ArgumentError);
}

TEST(StateDump, RoundTrip) {
  std::mt19937 rng(4);
  const StateVector psi(3, random_state(rng, 3));
  std::stringstream ss;
  write_state(ss, psi);
  EXPECT_EQ(ss.str().size(), 16u + 8 * 16);
  const auto back = read_state(ss);
  EXPECT_EQ(back.n_qubits(), 3u);
  EXPECT_EQ(back.amplitudes(), psi.amplitudes());
  std::stringstream bad("NOTASTATE.......");
  EXPECT_THROW(read_state(bad), ArgumentError);
}

TEST(Overlap, Basics) {
  std::mt19937 rng(1);
  const StateVector a(2, random_state(rng, 2)), b(2, random_state(rng, 2));
  EXPECT_NEAR(std::abs(overlap(a, a)), 1.0, 1e-12);
  EXPECT_EQ(std::abs(overlap(StateVector::basis(2, 0), StateVector::basis(2, 1))), 0.0);
  EXPECT_LT(std::abs(overlap(a, b) - a.amplitudes().dot(b.amplitudes())), 1e-15);
  EXPECT_THROW(overlap(a, StateVector::all_zeros(3)), DimensionError);
  EXPECT_NEAR(fubini_study_angle(a, b), oracle::fs_angle(a.amplitudes(), b.amplitudes()), 1e-12);
  EXPECT_NEAR(fubini_study_angle(StateVector::basis(1, 0), StateVector::basis(1, 1)), M_PI / 2, 1e-15);
}

TEST(StateVector, Invariants) {
  EXPECT_THROW(StateVector(kMatrixFreeCap + 1, Vector()), CapacityError);
  EXPECT_THROW(StateVector(2, Vector::Zero(3)), DimensionError);
  StateVector drifted(1, Vector::Constant(2, 1.0));
  EXPECT_THROW(drifted.check_norm(), NumericalHealthError);
}
