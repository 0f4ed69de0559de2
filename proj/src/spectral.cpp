#include "qcp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qcp/errors.hpp"

namespace qcp {

namespace {

constexpr double kCollinear = 1e-12;
constexpr double kTie = 1e-12;
constexpr double kSamePoint = 1e-9;
constexpr Complex kI{0.0, 1.0};

double cross(Complex o, Complex a, Complex b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) -
         (a.imag() - o.imag()) * (b.real() - o.real());
}

double segment_distance(Complex a, Complex b) {
  const Complex ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(a);
  const double t = std::clamp(-(a.real() * ab.real() + a.imag() * ab.imag()) / len2, 0.0, 1.0);
  return std::abs(a + t * ab);
}

// Andrew's monotone chain; returns indices of hull vertices, counter-clockwise.
std::vector<std::size_t> convex_hull(const std::vector<Complex>& pts) {
  std::vector<std::size_t> idx(pts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].real() != pts[b].real()) return pts[a].real() < pts[b].real();
    if (pts[a].imag() != pts[b].imag()) return pts[a].imag() < pts[b].imag();
    return a < b;
  });
  // drop coincident points (degenerate eigenvalues), keeping the lowest index
  std::vector<std::size_t> uniq;
  for (auto i : idx) {
    bool dup = false;
    for (auto u : uniq) {
      if (std::abs(pts[u] - pts[i]) <= kSamePoint) {
        dup = true;
        break;
      }
    }
    if (!dup) uniq.push_back(i);
  }
  if (uniq.size() <= 2) return uniq;

  std::vector<std::size_t> hull(2 * uniq.size());
  std::size_t k = 0;
  for (auto i : uniq) {
    while (k >= 2 && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[i]) <= kCollinear) --k;
    hull[k++] = i;
  }
  for (std::size_t j = uniq.size() - 1, t = k + 1; j-- > 0;) {
    const auto i = uniq[j];
    while (k >= t && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[i]) <= kCollinear) --k;
    hull[k++] = i;
  }
  hull.resize(k - 1);
  return hull;
}

// Picks the better of two candidate sides: smaller distance, then smaller
// principal argument of the midpoint.
bool better_side(double dist, Complex mid, double best_dist, Complex best_mid) {
  if (dist < best_dist - kTie) return true;
  if (dist > best_dist + kTie) return false;
  return std::arg(mid) < std::arg(best_mid);
}

}  // namespace

double SpectralGap::arg_ratio() const { return std::arg(lambda1 / lambda0); }

Complex chord_midpoint_phase(Complex lambda0, Complex lambda1) {
  const double gamma = std::abs(lambda1 - lambda0) / 2.0;
  if (gamma > 0.5) return (lambda1 - lambda0) / (2.0 * kI * gamma);
  return (lambda0 + lambda1) / (2.0 * std::sqrt(std::max(0.0, 1.0 - gamma * gamma)));
}

EigenPolygon eigen_polygon(const ComplexMatrix& u0, const ComplexMatrix& u1) {
  if (u0.rows() != u1.rows() || u0.cols() != u1.cols() || u0.rows() != u0.cols()) {
    throw InputError("eigen_polygon: unitaries must be square and of equal dimension");
  }
  if (!is_unitary(u0) || !is_unitary(u1)) throw InputError("eigen_polygon: input is not unitary");

  const auto eig = eig_normal(u0.adjoint() * u1);
  EigenPolygon poly;
  poly.eigenvectors = eig.vectors;
  poly.vertices.assign(eig.values.data(), eig.values.data() + eig.values.size());
  poly.hull = convex_hull(poly.vertices);
  const auto& v = poly.vertices;
  const auto& h = poly.hull;

  if (h.size() == 1) {
    poly.closest_side = {h[0], h[0]};
    poly.origin_distance = std::abs(v[h[0]]);
    return poly;
  }

  if (h.size() == 2) {
    poly.contains_origin = std::abs(cross(v[h[0]], v[h[1]], Complex{})) <= kCollinear &&
                           segment_distance(v[h[0]], v[h[1]]) <= kCollinear;
  } else {
    poly.contains_origin = true;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (cross(v[h[i]], v[h[(i + 1) % h.size()]], Complex{}) < -kCollinear) {
        poly.contains_origin = false;
        break;
      }
    }
  }

  double best = std::numeric_limits<double>::infinity();
  Complex best_mid{};
  if (!poly.contains_origin) {
    const std::size_t sides = h.size() == 2 ? 1 : h.size();
    for (std::size_t i = 0; i < sides; ++i) {
      const auto a = h[i];
      const auto b = h[(i + 1) % h.size()];
      const double dist = segment_distance(v[a], v[b]);
      const Complex mid = (v[a] + v[b]) / 2.0;
      if (better_side(dist, mid, best, best_mid)) {
        best = dist;
        best_mid = mid;
        poly.closest_side = {a, b};
      }
    }
    poly.origin_distance = best;
  } else {
    // chord between hull vertices passing nearest to the origin
    for (std::size_t i = 0; i < h.size(); ++i) {
      for (std::size_t j = i + 1; j < h.size(); ++j) {
        const double dist = segment_distance(v[h[i]], v[h[j]]);
        const Complex mid = (v[h[i]] + v[h[j]]) / 2.0;
        if (better_side(dist, mid, best, best_mid)) {
          best = dist;
          best_mid = mid;
          poly.closest_side = {h[i], h[j]};
        }
      }
    }
    poly.origin_distance = 0.0;
  }
  return poly;
}

SpectralGap gap_single(const ComplexMatrix& u0, const ComplexMatrix& u1) {
  const auto poly = eigen_polygon(u0, u1);
  auto [i, j] = poly.closest_side;
  if (i == j) {
    // single hull vertex: every eigenvalue coincides, take a second eigenvector
    if (poly.vertices.size() < 2) throw InputError("gap_single: channel dimension must be >= 2");
    j = (i == 0) ? 1 : 0;
  }
  SpectralGap gap;
  gap.lambda0 = poly.vertices[i];
  gap.lambda1 = poly.vertices[j];
  gap.vec0 = poly.eigenvectors.col(static_cast<Eigen::Index>(i));
  gap.vec1 = poly.eigenvectors.col(static_cast<Eigen::Index>(j));
  if (std::arg(gap.lambda1 / gap.lambda0) < 0.0) {
    std::swap(gap.lambda0, gap.lambda1);
    std::swap(gap.vec0, gap.vec1);
  }
  gap.origin_enclosed = poly.contains_origin;
  gap.gamma = poly.contains_origin ? 1.0 : std::min(1.0, std::abs(gap.lambda1 - gap.lambda0) / 2.0);
  gap.zeta = zeta_of(gap.gamma);
  gap.omega = chord_midpoint_phase(gap.lambda0, gap.lambda1);
  return gap;
}

SegmentGap segment_gap(std::span<const SpectralGap> steps) {
  if (steps.empty()) throw InputError("segment_gap: empty step list");
  SegmentGap seg;
  double accumulated = 0.0;
  for (const auto& s : steps) {
    seg.lambda0 *= s.lambda0;
    seg.lambda1 *= s.lambda1;
    accumulated += std::max(0.0, s.arg_ratio());
    seg.perfect = seg.perfect || s.origin_enclosed;
  }
  seg.perfect = seg.perfect || accumulated >= std::numbers::pi - 1e-12;
  seg.gamma = seg.perfect ? 1.0 : std::min(1.0, std::abs(seg.lambda1 / seg.lambda0 - 1.0) / 2.0);
  seg.zeta = zeta_of(seg.gamma);
  seg.omega = chord_midpoint_phase(seg.lambda0, seg.lambda1);
  return seg;
}

double gap_segment(std::span<const SpectralGap> steps) { return segment_gap(steps).gamma; }

}  // namespace qcp
