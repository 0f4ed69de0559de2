#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qcp/errors.hpp"
#include "qcp/linalg.hpp"

using namespace qcp;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexMatrix diag2(Complex a, Complex b) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

ComplexMatrix gram3(double a) {
  ComplexMatrix g(3, 3);
  g << 1.0, 0.8, a, 0.8, 1.0, 0.8, a, 0.8, 1.0;
  return g;
}

}  // namespace

TEST(EigNormal, IdentityHasUnitEigenvalues) {
  const auto e = eig_normal(ComplexMatrix::Identity(2, 2));
  EXPECT_NEAR(std::abs(e.values(0) - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(e.values(1) - 1.0), 0.0, 1e-14);
  EXPECT_TRUE(is_unitary(e.vectors));
}

TEST(EigNormal, DiagonalPhasePair) {
  const Complex l1 = std::polar(1.0, kPi / 10);
  const auto e = eig_normal(diag2(1.0, l1));
  bool found0 = false, found1 = false;
  for (int i = 0; i < 2; ++i) {
    if (std::abs(e.values(i) - 1.0) < 1e-12) {
      found0 = true;
      EXPECT_NEAR(std::abs(e.vectors(0, i)), 1.0, 1e-12);
    }
    if (std::abs(e.values(i) - l1) < 1e-12) {
      found1 = true;
      EXPECT_NEAR(std::abs(e.vectors(1, i)), 1.0, 1e-12);
    }
  }
  EXPECT_TRUE(found0 && found1);
}

TEST(EigNormal, HaarUnitaryReconstruction) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ComplexMatrix u = random_unitary(4, seed);
    const auto e = eig_normal(u);
    const ComplexMatrix rec = e.vectors * e.values.asDiagonal() * e.vectors.adjoint();
    EXPECT_LE(max_abs(rec - u), 1e-9);
    EXPECT_TRUE(is_unitary(e.vectors, 1e-10));
  }
}

TEST(EigNormal, DegenerateClusterResolved) {
  // eigenvalue 1 with multiplicity two alongside a distinct phase
  const ComplexMatrix v = random_unitary(3, 11);
  Eigen::VectorXcd lam(3);
  lam << 1.0, 1.0, std::polar(1.0, 0.7);
  const ComplexMatrix m = v * lam.asDiagonal() * v.adjoint();
  const auto e = eig_normal(m);
  EXPECT_LE(max_abs(ComplexMatrix(e.vectors * e.values.asDiagonal() * e.vectors.adjoint() - m)), 1e-10);
  EXPECT_TRUE(is_unitary(e.vectors, 1e-10));
}

TEST(EigNormal, RejectsNonNormal) {
  ComplexMatrix m(2, 2);
  m << 1.0, 1.0, 0.0, 1.0;
  EXPECT_THROW(eig_normal(m), InputError);
}

TEST(Kron, IdentityAndPauli) {
  EXPECT_LE(max_abs(ComplexMatrix(kron(ComplexMatrix(ComplexMatrix::Identity(2, 2)), ComplexMatrix(ComplexMatrix::Identity(2, 2))) -
                                  ComplexMatrix::Identity(4, 4))),
            0.0);
  ComplexMatrix expected = ComplexMatrix::Zero(4, 4);
  expected.diagonal() << 1.0, -1.0, -1.0, 1.0;
  EXPECT_LE(max_abs(ComplexMatrix(kron(pauli_z(), pauli_z()) - expected)), 0.0);
}

TEST(Kron, MixedProduct) {
  const ComplexMatrix a = random_unitary(2, 1), b = random_unitary(3, 2);
  const ComplexMatrix c = random_unitary(2, 3), d = random_unitary(3, 4);
  const ComplexMatrix lhs = kron(a, b) * kron(c, d);
  const ComplexMatrix rhs = kron(ComplexMatrix(a * c), ComplexMatrix(b * d));
  EXPECT_LE(max_abs(ComplexMatrix(lhs - rhs)), 1e-12);
}

TEST(PartialTrace, ProductState) {
  const ComplexMatrix a = random_unitary(2, 5), b = random_unitary(3, 6);
  const ComplexMatrix rho_a = a.col(0) * a.col(0).adjoint();
  const ComplexMatrix rho_b = b.col(1) * b.col(1).adjoint();
  const TensorShape shape({2, 3});
  const std::vector<std::size_t> keep_a{0}, keep_b{1};
  EXPECT_LE(max_abs(ComplexMatrix(partial_trace(kron(rho_a, rho_b), shape, keep_a) - rho_a)), 1e-13);
  EXPECT_LE(max_abs(ComplexMatrix(partial_trace(kron(rho_a, rho_b), shape, keep_b) - rho_b)), 1e-13);
}

TEST(PartialTrace, IdentityAndBell) {
  const TensorShape shape({2, 2});
  for (std::size_t k = 0; k < 2; ++k) {
    const std::vector<std::size_t> keep{k};
    EXPECT_LE(max_abs(ComplexMatrix(partial_trace(ComplexMatrix::Identity(4, 4), shape, keep) -
                                    2.0 * ComplexMatrix::Identity(2, 2))),
              1e-15);
  }
  ComplexVector phi = ComplexVector::Zero(4);
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  const std::vector<std::size_t> keep{1};
  const ComplexMatrix r = partial_trace(phi * phi.adjoint(), shape, keep);
  EXPECT_LE(max_abs(ComplexMatrix(r - 0.5 * ComplexMatrix::Identity(2, 2))), 1e-15);
}

TEST(PartialTrace, RejectsBadIndex) {
  const std::vector<std::size_t> keep{2};
  EXPECT_THROW(partial_trace(ComplexMatrix::Identity(4, 4), TensorShape({2, 2}), keep), InputError);
}

TEST(PermuteFactors, SwapMatchesReversedKron) {
  const ComplexMatrix a = random_unitary(2, 7), b = random_unitary(3, 8);
  const std::vector<std::size_t> perm{1, 0};
  const ComplexMatrix swapped = permute_factors(kron(a, b), TensorShape({2, 3}), perm);
  EXPECT_LE(max_abs(ComplexMatrix(swapped - kron(b, a))), 1e-14);
}

TEST(ExpmSkew, ZeroAndPauli) {
  EXPECT_LE(max_abs(ComplexMatrix(expm_skew(ComplexMatrix::Zero(2, 2), 0.3) - ComplexMatrix::Identity(2, 2))),
            1e-15);
  EXPECT_LE(max_abs(ComplexMatrix(expm_skew(pauli_z(), kPi) + ComplexMatrix::Identity(2, 2))), 1e-14);
}

TEST(ExpmSkew, SemigroupAndUnitarity) {
  const ComplexMatrix u = random_unitary(3, 9);
  ComplexMatrix h = u * Eigen::Vector3cd(0.3, -1.2, 0.5).asDiagonal() * u.adjoint();
  h = (h + h.adjoint()) / 2.0;
  const ComplexMatrix lhs = expm_skew(h, 0.4) * expm_skew(h, 0.7);
  EXPECT_LE(max_abs(ComplexMatrix(lhs - expm_skew(h, 1.1))), 1e-12);
  EXPECT_TRUE(is_unitary(expm_skew(h, 2.5)));
}

TEST(ExpmSkew, RejectsNonHermitian) {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(expm_skew(m, 1.0), InputError);
}

TEST(PsdCheck, IdentityAndGramBoundary) {
  const auto id = psd_check(ComplexMatrix::Identity(2, 2), 0.0);
  EXPECT_TRUE(id.is_psd);
  EXPECT_NEAR(id.min_eigenvalue, 1.0, 1e-15);
  const auto edge = psd_check(gram3(0.28), 1e-9);
  EXPECT_NEAR(edge.min_eigenvalue, 0.0, 1e-9);
  EXPECT_TRUE(edge.is_psd);
  const auto below = psd_check(gram3(0.2), 1e-9);
  EXPECT_FALSE(below.is_psd);
  EXPECT_LT(below.min_eigenvalue, 0.0);
}

TEST(GramFactor, IdentityAndRankOne) {
  const auto f3 = gram_factor(ComplexMatrix::Identity(3, 3));
  EXPECT_EQ(f3.rank, 3u);
  EXPECT_LE(max_abs(ComplexMatrix(f3.factors.adjoint() * f3.factors - ComplexMatrix::Identity(3, 3))), 1e-13);
  const auto f1 = gram_factor(ComplexMatrix::Ones(2, 2));
  EXPECT_EQ(f1.rank, 1u);
  EXPECT_EQ(f1.factors.rows(), 1);
  EXPECT_LE(max_abs(ComplexMatrix(f1.factors.adjoint() * f1.factors - ComplexMatrix::Ones(2, 2))), 1e-13);
}

TEST(GramFactor, ComplexGramReconstruction) {
  // Gram of three pure states with complex overlaps
  const ComplexMatrix u = random_unitary(3, 21);
  ComplexMatrix vecs(3, 3);
  vecs.col(0) = u.col(0);
  vecs.col(1) = (u.col(0) + Complex(0.0, 0.5) * u.col(1)).normalized();
  vecs.col(2) = (u.col(0) - 0.3 * u.col(1) + Complex(0.2, 0.1) * u.col(2)).normalized();
  const ComplexMatrix g = gram_of(vecs);
  const auto f = gram_factor(g);
  EXPECT_LE(max_abs(ComplexMatrix(f.factors.adjoint() * f.factors - g)), 1e-9);
}

TEST(GramFactor, RejectsIndefinite) { EXPECT_THROW(gram_factor(gram3(0.0)), InputError); }

TEST(ChoiOfUnitary, TraceOverOutputIsIdentity) {
  const ComplexMatrix c = choi_of_unitary(random_unitary(2, 4));
  const std::vector<std::size_t> keep_v{1};
  EXPECT_LE(max_abs(ComplexMatrix(partial_trace(c, TensorShape({2, 2}), keep_v) - ComplexMatrix::Identity(2, 2))),
            1e-13);
  EXPECT_NEAR(c.trace().real(), 2.0, 1e-13);
}

TEST(CompleteOrthonormal, ExtendsBasis) {
  ComplexMatrix b(3, 1);
  b << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0)), 0.0;
  const ComplexMatrix u = complete_orthonormal(b);
  EXPECT_TRUE(is_unitary(u));
  EXPECT_LE(max_abs(ComplexMatrix(u.col(0) - b.col(0))), 1e-14);
}
