#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qcp/linalg.hpp"

namespace qcp {

/// The closest-side eigen-pair of U0^dagger U1 and the derived distinguishability
/// parameters. lambda0/lambda1 are ordered so that 0 <= arg(lambda1/lambda0) <= pi.
struct SpectralGap {
  Complex lambda0{1.0, 0.0};
  Complex lambda1{1.0, 0.0};
  ComplexVector vec0;
  ComplexVector vec1;
  double gamma = 0.0;
  double zeta = 1.0;
  Complex omega{1.0, 0.0};
  /// The eigenvalue polygon contains the origin (gamma forced to 1).
  bool origin_enclosed = false;

  /// arg(lambda1 / lambda0) in [0, pi].
  double arg_ratio() const;
};

/// Convex hull of the eigenvalues of U0^dagger U1 in the complex plane.
struct EigenPolygon {
  std::vector<Complex> vertices;     // every eigenvalue, with multiplicity
  ComplexMatrix eigenvectors;        // column i belongs to vertices[i]
  std::vector<std::size_t> hull;     // counter-clockwise hull vertex indices
  std::pair<std::size_t, std::size_t> closest_side{0, 0};
  double origin_distance = 1.0;
  bool contains_origin = false;
};

/// Segment-level data obtained by composing R per-step gaps.
struct SegmentGap {
  double gamma = 0.0;
  double zeta = 1.0;
  Complex lambda0{1.0, 0.0};  // product of the per-step lambda0
  Complex lambda1{1.0, 0.0};  // product of the per-step lambda1
  Complex omega{1.0, 0.0};
  bool perfect = false;       // gamma == 1 by origin containment or phase accumulation
};

EigenPolygon eigen_polygon(const ComplexMatrix& u0, const ComplexMatrix& u1);

SpectralGap gap_single(const ComplexMatrix& u0, const ComplexMatrix& u1);

/// Composes per-step gaps of one segment into its gamma_k.
SegmentGap segment_gap(std::span<const SpectralGap> steps);
double gap_segment(std::span<const SpectralGap> steps);

/// Square root of lambda0*lambda1 on the branch satisfying
/// lambda0 + lambda1 = 2 sqrt(1 - gamma^2) omega and lambda1 - lambda0 = 2 i gamma omega.
Complex chord_midpoint_phase(Complex lambda0, Complex lambda1);

inline double zeta_of(double gamma) { return (1.0 - gamma) / (1.0 + gamma); }

}  // namespace qcp
