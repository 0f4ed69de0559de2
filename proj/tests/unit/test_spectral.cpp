#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qcp/errors.hpp"
#include "qcp/spectral.hpp"

using namespace qcp;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexMatrix phase(double theta) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(1, 1) = std::polar(1.0, theta);
  return m;
}

ComplexMatrix diag_unitary(const std::vector<double>& angles) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(angles.size()), static_cast<Eigen::Index>(angles.size()));
  for (std::size_t i = 0; i < angles.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = std::polar(1.0, angles[i]);
  return m;
}

// brute-force min |sum w_k lambda_k| over the simplex
double simplex_distance(const std::vector<Complex>& lam, int grid) {
  double best = 1e9;
  for (int a = 0; a <= grid; ++a)
    for (int b = 0; a + b <= grid; ++b)
      for (int c = 0; a + b + c <= grid; ++c) {
        const int d = grid - a - b - c;
        const Complex z = (static_cast<double>(a) * lam[0] + static_cast<double>(b) * lam[1] +
                           static_cast<double>(c) * lam[2] + static_cast<double>(d) * lam[3]) /
                          static_cast<double>(grid);
        best = std::min(best, std::abs(z));
      }
  return best;
}

}  // namespace

TEST(EigenPolygon, IdenticalUnitaries) {
  const auto p = eigen_polygon(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(2, 2));
  EXPECT_NEAR(p.origin_distance, 1.0, 1e-14);
  EXPECT_FALSE(p.contains_origin);
  for (const auto& v : p.vertices) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-14);
}

TEST(EigenPolygon, AntipodalPairContainsOrigin) {
  const auto p = eigen_polygon(ComplexMatrix::Identity(2, 2), pauli_z());
  EXPECT_TRUE(p.contains_origin);
  EXPECT_NEAR(p.origin_distance, 0.0, 1e-14);
}

TEST(EigenPolygon, DistanceMatchesSimplexSearch) {
  // eigenvalues within a half-plane so the origin is outside
  const std::vector<double> angles{0.1, 0.9, 1.7, 2.6};
  const auto p = eigen_polygon(ComplexMatrix::Identity(4, 4), diag_unitary(angles));
  std::vector<Complex> lam;
  for (double a : angles) lam.push_back(std::polar(1.0, a));
  const double grid = simplex_distance(lam, 400);
  EXPECT_FALSE(p.contains_origin);
  EXPECT_LE(p.origin_distance, grid + 1e-12);
  EXPECT_NEAR(p.origin_distance, grid, 1e-6);
}

TEST(EigenPolygon, RejectsDimensionMismatch) {
  EXPECT_THROW(eigen_polygon(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(3, 3)), InputError);
}

TEST(GapSingle, PhasePairAndEdgeCases) {
  EXPECT_NEAR(gap_single(ComplexMatrix::Identity(2, 2), phase(kPi / 10)).gamma, std::sin(kPi / 20), 1e-14);
  EXPECT_NEAR(gap_single(ComplexMatrix::Identity(2, 2), phase(kPi / 10)).gamma, 0.15643447, 1e-8);
  const ComplexMatrix u = random_unitary(3, 5);
  EXPECT_NEAR(gap_single(u, u).gamma, 0.0, 1e-12);
  const auto sx = gap_single(ComplexMatrix::Identity(2, 2), pauli_x());
  EXPECT_NEAR(sx.gamma, 1.0, 1e-14);
  EXPECT_TRUE(sx.origin_enclosed);
}

TEST(GapSingle, ChordIdentities) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ComplexMatrix u0 = random_unitary(3, seed), u1 = random_unitary(3, seed + 100);
    const auto g = gap_single(u0, u1);
    if (g.origin_enclosed) continue;
    EXPECT_NEAR(std::abs(g.lambda0 + g.lambda1) / 2.0, std::sqrt(1.0 - g.gamma * g.gamma), 1e-12);
    EXPECT_NEAR(std::abs(g.lambda1 - g.lambda0) / 2.0, g.gamma, 1e-12);
    EXPECT_NEAR(std::abs(g.omega * g.omega - g.lambda0 * g.lambda1), 0.0, 1e-12);
    EXPECT_NEAR(g.zeta, (1.0 - g.gamma) / (1.0 + g.gamma), 1e-15);
    EXPECT_GE(g.arg_ratio(), 0.0);
    EXPECT_LE(g.arg_ratio(), kPi);
  }
}

TEST(GapSingle, MinimumOverRandomStates) {
  // |<phi|U0^dagger U1|phi>| >= origin distance for every state
  const ComplexMatrix u0 = random_unitary(3, 40), u1 = random_unitary(3, 41);
  const auto g = gap_single(u0, u1);
  const auto p = eigen_polygon(u0, u1);
  const ComplexMatrix w = u0.adjoint() * u1;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const ComplexVector phi = random_unitary(3, 1000 + s).col(0);
    EXPECT_GE(std::abs(phi.dot(w * phi)), p.origin_distance - 1e-4);
  }
  if (!g.origin_enclosed) EXPECT_NEAR(std::sqrt(1.0 - g.gamma * g.gamma), p.origin_distance, 1e-12);
}

TEST(GapSegment, SingleStepAndAccumulation) {
  const auto g = gap_single(ComplexMatrix::Identity(2, 2), phase(kPi / 10));
  std::vector<SpectralGap> one{g};
  EXPECT_NEAR(gap_segment(one), 0.15643447, 1e-8);
  std::vector<SpectralGap> two(2, g);
  EXPECT_NEAR(gap_segment(two), std::sin(kPi / 10), 1e-12);
  std::vector<SpectralGap> ten(10, g);
  EXPECT_NEAR(gap_segment(ten), 1.0, 1e-12);
  EXPECT_TRUE(segment_gap(ten).perfect);
  EXPECT_THROW(gap_segment(std::vector<SpectralGap>{}), InputError);
}

TEST(GapSegment, RefinementInvariance) {
  // splitting one phase step into equal sub-steps leaves gamma unchanged
  const double theta = 0.9;
  const std::vector<SpectralGap> whole{gap_single(ComplexMatrix::Identity(2, 2), phase(theta))};
  for (int parts : {2, 3, 7}) {
    std::vector<SpectralGap> pieces(static_cast<std::size_t>(parts),
                                    gap_single(ComplexMatrix::Identity(2, 2), phase(theta / parts)));
    EXPECT_NEAR(gap_segment(pieces), gap_segment(whole), 1e-12);
  }
}

TEST(ChordMidpoint, SquaresToProduct) {
  const Complex l0 = std::polar(1.0, 0.4), l1 = std::polar(1.0, 1.3);
  const Complex w = chord_midpoint_phase(l0, l1);
  EXPECT_NEAR(std::abs(w * w - l0 * l1), 0.0, 1e-14);
  const double gamma = std::abs(l1 - l0) / 2.0;
  EXPECT_NEAR(std::abs(l0 + l1 - 2.0 * std::sqrt(1.0 - gamma * gamma) * w), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(l1 - l0 - Complex(0.0, 2.0 * gamma) * w), 0.0, 1e-14);
}
