#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcp/linalg.hpp"
#include "qcp/sdp.hpp"
#include "qcp/strategy.hpp"

namespace qcp {

/// Top-down reconstruction of the comb hierarchy of X on W_T V_T ... W_1 V_1:
/// Tr_{W_t} tau^{(t)} = I_{V_t} (x) tau^{(t-1)}, tau^{(T)} = X, tau^{(0)} = eta.
struct ConeLevel {
  std::size_t level = 0;        // t
  double residual = 0.0;        // max-entry residual of the identity-factor equation
  double min_eigenvalue = 0.0;  // of tau^{(t-1)}
};

struct ConeReport {
  double eta = 0.0;
  double residual = 0.0;
  double min_eigenvalue = 0.0;  // over X and every tau
  std::vector<ConeLevel> levels;
};

ConeReport comb_cone_check(const ComplexMatrix& x, std::size_t d, std::size_t steps);

/// Feasibility of a single-segment Y: comb cone plus Y >= choi_b / 2.
struct SegmentYReport {
  ConeReport cone;
  double margin0 = 0.0;  // min eigenvalue of Y - choi0/2
  double margin1 = 0.0;
  bool feasible(double tolerance = 1e-6) const;
};

SegmentYReport check_segment_y(const ComplexMatrix& y, const ComplexMatrix& choi0, const ComplexMatrix& choi1,
                               std::size_t d, std::size_t steps);

struct CertificateOptions {
  /// Reject infeasible per-segment Y up front; otherwise report verdict = false.
  bool strict = true;
  /// Largest certificate dimension d^{2NR} assembled.
  std::size_t max_dim = 1024;
  double tolerance = 1e-6;
  double q_tolerance = 1e-8;
  sdp::Options sdp;
};

struct Certificate {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t steps = 0;  // R
  std::vector<double> gammas;
  std::vector<double> segment_eta;  // eta(Y^{(k)})
  std::vector<SegmentYReport> segment_reports;
  ComplexMatrix x;
  ConeReport cone;
  std::vector<double> dominance;  // min eigenvalue of X - E_m/(N+1)
  double min_dominance = 0.0;
  double eta = 0.0;                // upper bound on the success probability
  double q = 0.0;                  // (1 + sum gamma_k)/(N+1)
  double q_discrepancy = 0.0;
  bool verdict = false;
};

/// Solves the single-segment problems (sharing solutions between identical segments)
/// and assembles the certificate.
Certificate build_certificate(const ChangePointProblem& problem, const CertificateOptions& options = {});

/// Assembles the certificate from user-supplied per-segment Y (segment 1 first).
Certificate certificate_from_y(const ChangePointProblem& problem, std::span<const ComplexMatrix> ys,
                               const CertificateOptions& options = {});

/// X^{(1)} = Y^{(1)}, X^{(n)} = [n U1^{(n)} (x) X^{(n-1)} + (2 Y^{(n)} - U1^{(n)}) (x) E^{(n-1)}_{n-1}] / (n+1).
ComplexMatrix assemble_certificate(const ChangePointProblem& problem, std::span<const ComplexMatrix> ys);

/// lower <= strategy <= upper, with lower from the product-input baseline when the
/// segments are identical (NaN otherwise).
struct Sandwich {
  double lower = 0.0;
  double strategy = 0.0;
  double formula = 0.0;
  double upper = 0.0;
  double tolerance = 0.0;
  bool holds = false;
};

Sandwich sandwich(const ChangePointProblem& problem, const Certificate& certificate,
                  const sdp::Options& options = {});

/// {"segments": [matrix, ...]} or a bare matrix shared by every segment.
std::vector<ComplexMatrix> segment_ys_from_json(const nlohmann::json& j, std::size_t n);
nlohmann::json segment_ys_to_json(std::span<const ComplexMatrix> ys);

nlohmann::json certificate_to_json(const Certificate& c);

}  // namespace qcp
