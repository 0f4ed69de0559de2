#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qcp/certificate.hpp"
#include "qcp/errors.hpp"
#include "qcp/io.hpp"

using namespace qcp;

namespace {

constexpr double kPi = std::numbers::pi;
const double kGammaPair = std::sin(kPi / 20);

ComplexMatrix phase(double theta) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(1, 1) = std::polar(1.0, theta);
  return m;
}

ChangePointProblem pair_problem(std::size_t n, std::size_t r = 1) {
  return ChangePointProblem::repeated(ComplexMatrix::Identity(2, 2), phase(kPi / 10), n, r);
}

ComplexMatrix random_hermitian(Eigen::Index n, std::uint64_t seed) {
  const ComplexMatrix u = random_unitary(static_cast<std::size_t>(n), seed);
  RealVector ev = RealVector::LinSpaced(n, -1.0, 1.0);
  return u * ev.cast<Complex>().asDiagonal() * u.adjoint();
}

double min_eig(const ComplexMatrix& m) { return eig_hermitian(m).values.minCoeff(); }

}  // namespace

TEST(CombCone, UnitaryChannelHasUnitEta) {
  const auto c = comb_cone_check(choi_of_unitary(random_unitary(2, 3)), 2, 1);
  EXPECT_LE(c.residual, 1e-12);
  EXPECT_NEAR(c.eta, 1.0, 1e-12);
  const auto two = comb_cone_check(segment_choi(pair_problem(1, 2), 1, 1), 2, 2);
  EXPECT_LE(two.residual, 1e-12);
  EXPECT_NEAR(two.eta, 1.0, 1e-12);
}

TEST(CombCone, ScalingIsHomogeneous) {
  const ComplexMatrix x = choi_of_unitary(ComplexMatrix::Identity(2, 2));
  EXPECT_NEAR(comb_cone_check(3.0 * x, 2, 1).eta, 3.0, 1e-12);
  const ComplexMatrix y = segment_choi(pair_problem(1, 2), 1, 0) + random_hermitian(16, 5) * 1e-3;
  const auto a = comb_cone_check(y, 2, 2);
  const auto b = comb_cone_check(2.5 * y, 2, 2);
  EXPECT_NEAR(b.eta, 2.5 * a.eta, 1e-12);
  EXPECT_NEAR(b.residual, 2.5 * a.residual, 1e-12);
}

TEST(CombCone, PerturbationRaisesResidualLinearly) {
  const ComplexMatrix x = segment_choi(pair_problem(1, 2), 1, 1);
  const ComplexMatrix noise = random_hermitian(16, 8);
  for (double eps : {1e-6, 1e-4, 1e-2}) {
    const double res = comb_cone_check(x + eps * noise, 2, 2).residual;
    EXPECT_GT(res, 1e-3 * eps);
    EXPECT_LT(res, 1e2 * eps);
  }
}

TEST(Certificate, SingleSegmentIsY) {
  const auto p = pair_problem(1);
  const auto c = build_certificate(p);
  const auto dy = sdp::solve_dy(segment_choi(p, 1, 0), segment_choi(p, 1, 1), 2, 1);
  EXPECT_LE(max_abs(ComplexMatrix(c.x - dy.y)), 1e-9);
  EXPECT_NEAR(c.eta, (kGammaPair + 1) / 2, 1e-6);
  EXPECT_TRUE(c.verdict);
  for (double m : c.dominance) EXPECT_GE(m, -1e-7);
}

TEST(Certificate, TwoSegmentsMatchesFormulaAndTester) {
  const auto p = pair_problem(2);
  const auto c = build_certificate(p);
  EXPECT_NEAR(c.eta, (2 * kGammaPair + 1) / 3, 1e-6);
  EXPECT_LE(c.cone.residual, 1e-6);
  EXPECT_TRUE(c.verdict);
  std::vector<ComplexMatrix> chois;
  for (std::size_t n = 0; n <= 2; ++n) chois.push_back(process_choi(p, n));
  EXPECT_NEAR(sdp::solve_tester_sdp(chois, 2, 2).value, c.eta, 1e-5);
}

TEST(Certificate, RecursionEtaMatchesSegmentValues) {
  const ComplexMatrix u0 = random_unitary(2, 61);
  ChangePointProblem p;
  for (std::size_t k = 0; k < 3; ++k) p.segments.push_back({{u0, u0 * random_unitary(2, 70 + k)}});
  const auto c = build_certificate(p);
  double sum = 0.0;
  for (double y : c.segment_eta) sum += 2.0 * y;
  EXPECT_NEAR(c.eta, (sum - 3.0 + 1.0) / 4.0, 1e-7);
  EXPECT_NEAR(c.eta, max_success_probability(c.gammas), 1e-6);
  EXPECT_TRUE(c.verdict);
}

TEST(Certificate, UniformFiveSegments) {
  const double g = 0.4;
  const auto p = ChangePointProblem::repeated(ComplexMatrix::Identity(2, 2), phase(2 * std::asin(g)), 5);
  const auto c = build_certificate(p);
  EXPECT_NEAR(c.eta, (5 * g + 1) / 6, 1e-6);
  EXPECT_TRUE(c.verdict);
}

TEST(Certificate, DominanceOfPerfectPairAverage) {
  const auto p = ChangePointProblem::repeated(ComplexMatrix::Identity(2, 2), pauli_z(), 1);
  const ComplexMatrix e0 = process_choi(p, 0), e1 = process_choi(p, 1);
  const ComplexMatrix x = (e0 + e1) / 2.0;
  EXPECT_GE(min_eig(ComplexMatrix(x - e0 / 2.0)), -1e-12);
  EXPECT_GE(min_eig(ComplexMatrix(x - e1 / 2.0)), -1e-12);
  // one process alone does not dominate the other
  const auto q = pair_problem(1);
  const ComplexMatrix f0 = process_choi(q, 0), f1 = process_choi(q, 1);
  EXPECT_GE(min_eig(ComplexMatrix(f0 / 2.0 - f0 / 2.0)), -1e-12);
  EXPECT_LT(min_eig(ComplexMatrix(f0 / 2.0 - f1 / 2.0)), -1e-3);
}

TEST(Certificate, CorruptYIsRejected) {
  const auto p = ChangePointProblem::repeated(io::read_matrix_file(std::string(QCP_TEST_DATA) + "/pair_u0.json"),
                                              io::read_matrix_file(std::string(QCP_TEST_DATA) + "/pair_u1.json"), 2);
  const auto ys = segment_ys_from_json(io::read_json_file(std::string(QCP_TEST_DATA) + "/y_corrupt_pair_n2.json"), 2);
  EXPECT_THROW(certificate_from_y(p, ys), InputError);
  CertificateOptions lax;
  lax.strict = false;
  const auto c = certificate_from_y(p, ys, lax);
  EXPECT_FALSE(c.verdict);
  EXPECT_LT(std::min(c.segment_reports[0].margin0, c.segment_reports[0].margin1), -1e-3);
  const auto good = segment_ys_from_json(io::read_json_file(std::string(QCP_TEST_DATA) + "/y_valid_pair_n2.json"), 2);
  EXPECT_TRUE(certificate_from_y(p, good).verdict);
}

TEST(Sandwich, ThreeSegmentsAgree) {
  const auto p = pair_problem(3);
  const auto c = build_certificate(p);
  const auto s = sandwich(p, c);
  const double f = (3 * kGammaPair + 1) / 4;
  EXPECT_NEAR(f, 0.3673259, 1e-7);
  EXPECT_NEAR(s.strategy, f, 1e-6);
  EXPECT_NEAR(s.upper, f, 1e-6);
  EXPECT_LE(std::abs(s.strategy - s.upper), 2e-6);
  EXPECT_LE(s.lower, s.strategy + 1e-6);
  EXPECT_TRUE(s.holds);
}

TEST(Sandwich, SingleSegmentIsTight) {
  const auto p = ChangePointProblem::repeated(random_unitary(2, 1), random_unitary(2, 2), 1);
  const auto c = build_certificate(p);
  const auto s = sandwich(p, c);
  EXPECT_NEAR(s.strategy, s.upper, 2e-6);
  EXPECT_NEAR(s.lower, s.upper, 2e-6);
  EXPECT_TRUE(s.holds);
}

TEST(CertificateJson, SegmentYRoundTrip) {
  const auto c = build_certificate(pair_problem(1));
  const std::vector<ComplexMatrix> ys{c.x};
  const auto back = segment_ys_from_json(segment_ys_to_json(ys), 1);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_LE(max_abs(ComplexMatrix(back[0] - c.x)), 0.0);
  const auto shared = segment_ys_from_json(io::matrix_to_json(c.x), 3);
  EXPECT_EQ(shared.size(), 3u);
  auto bad = segment_ys_to_json(ys);
  bad["extra"] = 1;
  EXPECT_THROW(segment_ys_from_json(bad, 1), InputError);
  const auto j = certificate_to_json(c);
  EXPECT_TRUE(j.at("verdict").get<bool>());
  EXPECT_EQ(j.at("segments").size(), 1u);
}
