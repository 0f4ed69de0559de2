#include "qcp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "qcp/errors.hpp"

namespace qcp {

namespace {

constexpr Complex kI{0.0, 1.0};

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) strides[i - 1] = strides[i] * dims[i];
  return strides;
}

// Flat offsets of every multi-index over `factors` (in order), using the
// strides of the ambient shape.
std::vector<std::size_t> offsets_of(const std::vector<std::size_t>& dims,
                                    const std::vector<std::size_t>& strides,
                                    const std::vector<std::size_t>& factors) {
  std::size_t count = 1;
  for (auto f : factors) count *= dims[f];
  std::vector<std::size_t> out(count, 0);
  std::vector<std::size_t> digit(factors.size(), 0);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) off += digit[i] * strides[factors[i]];
    out[flat] = off;
    for (std::size_t i = factors.size(); i-- > 0;) {
      if (++digit[i] < dims[factors[i]]) break;
      digit[i] = 0;
    }
  }
  return out;
}

void check_shape(const TensorShape& shape, Eigen::Index dim) {
  if (static_cast<Eigen::Index>(shape.total()) != dim) {
    throw InputError("tensor shape of total dimension " + std::to_string(shape.total()) +
                     " does not match matrix dimension " + std::to_string(dim));
  }
}

std::vector<std::size_t> permutation_map(const TensorShape& shape,
                                         std::span<const std::size_t> perm) {
  const auto& dims = shape.factor_dims;
  if (perm.size() != dims.size()) throw InputError("permutation length does not match shape");
  std::vector<bool> seen(dims.size(), false);
  for (auto p : perm) {
    if (p >= dims.size() || seen[p]) throw InputError("invalid factor permutation");
    seen[p] = true;
  }
  const auto strides = strides_of(dims);
  return offsets_of(dims, strides, std::vector<std::size_t>(perm.begin(), perm.end()));
}

}  // namespace

TensorShape::TensorShape(std::vector<std::size_t> dims) : factor_dims(std::move(dims)) {
  for (auto d : factor_dims) {
    if (d == 0) throw InputError("tensor factor dimension must be at least 1");
  }
}

TensorShape TensorShape::uniform(std::size_t factors, std::size_t dim) {
  return TensorShape(std::vector<std::size_t>(factors, dim));
}

std::size_t TensorShape::total() const noexcept {
  return std::accumulate(factor_dims.begin(), factor_dims.end(), std::size_t{1},
                         std::multiplies<>());
}

bool is_unitary(const ComplexMatrix& u, double tolerance) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())) <= tolerance;
}

bool is_hermitian(const ComplexMatrix& m, double tolerance) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) <= tolerance;
}

HermitianEigen eig_hermitian(const ComplexMatrix& m) {
  const ComplexMatrix sym = (m + m.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

EigenPairs eig_normal(const ComplexMatrix& m, double normality_tol) {
  if (m.rows() != m.cols()) throw InputError("eig_normal requires a square matrix");
  const double scale = std::max(1.0, max_abs(m));
  const double residual = max_abs(m * m.adjoint() - m.adjoint() * m);
  if (residual > normality_tol * scale * scale) {
    throw InputError("matrix is not normal: max |MM^+ - M^+M| = " + std::to_string(residual));
  }
  const ComplexMatrix re_part = (m + m.adjoint()) * 0.5;
  const ComplexMatrix im_part = (m - m.adjoint()) / (2.0 * kI);

  auto [a_values, vectors] = eig_hermitian(re_part);
  const Eigen::Index n = m.rows();
  const double gap = tol::kDegeneracy * scale;

  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && a_values(end) - a_values(end - 1) <= gap) ++end;
    const Eigen::Index count = end - start;
    if (count > 1) {
      const ComplexMatrix block = vectors.middleCols(start, count);
      const ComplexMatrix restricted = block.adjoint() * im_part * block;
      const auto inner = eig_hermitian(restricted);
      vectors.middleCols(start, count) = block * inner.vectors;
    }
    start = end;
  }

  EigenPairs out;
  out.vectors = vectors;
  out.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = vectors.col(i).dot(m * vectors.col(i));
  }
  return out;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, const TensorShape& shape,
                            std::span<const std::size_t> keep) {
  if (m.rows() != m.cols()) throw InputError("partial_trace requires a square matrix");
  check_shape(shape, m.rows());
  const auto& dims = shape.factor_dims;
  std::vector<std::size_t> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
    throw InputError("partial_trace: duplicate keep index");
  }
  if (!kept.empty() && kept.back() >= dims.size()) {
    throw InputError("partial_trace: keep index " + std::to_string(kept.back()) +
                     " out of range for " + std::to_string(dims.size()) + " factors");
  }
  std::vector<std::size_t> traced;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (!std::binary_search(kept.begin(), kept.end(), i)) traced.push_back(i);
  }
  const auto strides = strides_of(dims);
  const auto keep_off = offsets_of(dims, strides, kept);
  const auto trace_off = offsets_of(dims, strides, traced);

  const auto nk = static_cast<Eigen::Index>(keep_off.size());
  ComplexMatrix out = ComplexMatrix::Zero(nk, nk);
  for (Eigen::Index i = 0; i < nk; ++i) {
    for (Eigen::Index j = 0; j < nk; ++j) {
      Complex acc{0.0, 0.0};
      for (auto t : trace_off) {
        acc += m(static_cast<Eigen::Index>(keep_off[i] + t),
                 static_cast<Eigen::Index>(keep_off[j] + t));
      }
      out(i, j) = acc;
    }
  }
  return out;
}

ComplexMatrix permute_factors(const ComplexMatrix& m, const TensorShape& shape,
                              std::span<const std::size_t> perm) {
  if (m.rows() != m.cols()) throw InputError("permute_factors requires a square matrix");
  check_shape(shape, m.rows());
  const auto map = permutation_map(shape, perm);
  const auto n = static_cast<Eigen::Index>(map.size());
  ComplexMatrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out(i, j) = m(static_cast<Eigen::Index>(map[i]), static_cast<Eigen::Index>(map[j]));
    }
  }
  return out;
}

ComplexVector permute_factors(const ComplexVector& v, const TensorShape& shape,
                              std::span<const std::size_t> perm) {
  check_shape(shape, v.size());
  const auto map = permutation_map(shape, perm);
  ComplexVector out(v.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(map[i]));
  }
  return out;
}

ComplexVector apply_factor(const ComplexVector& v, const TensorShape& shape, std::size_t factor,
                           const ComplexMatrix& op) {
  check_shape(shape, v.size());
  if (factor >= shape.size()) throw InputError("apply_factor: factor index out of range");
  const auto d = static_cast<Eigen::Index>(shape.factor_dims[factor]);
  if (op.rows() != d || op.cols() != d) throw InputError("apply_factor: operator dimension mismatch");
  const auto strides = strides_of(shape.factor_dims);
  const auto right = static_cast<Eigen::Index>(strides[factor]);
  const Eigen::Index left = v.size() / (d * right);

  ComplexVector out = ComplexVector::Zero(v.size());
  for (Eigen::Index l = 0; l < left; ++l) {
    for (Eigen::Index r = 0; r < right; ++r) {
      const Eigen::Index base = l * d * right + r;
      for (Eigen::Index a = 0; a < d; ++a) {
        Complex acc{0.0, 0.0};
        for (Eigen::Index b = 0; b < d; ++b) acc += op(a, b) * v(base + b * right);
        out(base + a * right) = acc;
      }
    }
  }
  return out;
}

ComplexMatrix expm_skew(const ComplexMatrix& h, double dt) {
  if (!is_hermitian(h, tol::kHermitian * std::max(1.0, max_abs(h)))) {
    throw InputError("expm_skew: generator is not Hermitian");
  }
  const auto eig = eig_hermitian(h);
  ComplexVector phases(eig.values.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::exp(-kI * eig.values(i) * dt);
  }
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

PsdReport psd_check(const ComplexMatrix& m, double tolerance) {
  if (m.rows() != m.cols()) throw InputError("psd_check requires a square matrix");
  if (m.size() == 0) return {true, 0.0};
  const ComplexMatrix sym = (m + m.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  const double min_ev = solver.eigenvalues()(0);
  return {min_ev >= -tolerance, min_ev};
}

GramFactorization gram_factor(const ComplexMatrix& g, double rank_tol) {
  if (g.rows() != g.cols()) throw InputError("gram_factor requires a square matrix");
  const auto eig = eig_hermitian(g);
  if (eig.values.size() > 0 && eig.values(0) < -rank_tol) {
    throw InputError("Gram matrix is not PSD: min eigenvalue " + std::to_string(eig.values(0)));
  }
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = eig.values.size(); i-- > 0;) {
    if (eig.values(i) > rank_tol) kept.push_back(i);
  }
  GramFactorization out;
  out.rank = kept.size();
  out.factors.resize(static_cast<Eigen::Index>(kept.size()), g.cols());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const auto idx = kept[r];
    out.factors.row(static_cast<Eigen::Index>(r)) =
        std::sqrt(eig.values(idx)) * eig.vectors.col(idx).adjoint();
  }
  return out;
}

ComplexMatrix gram_of(const ComplexMatrix& vectors) { return vectors.adjoint() * vectors; }

ComplexMatrix orthonormal_complement(const ComplexMatrix& basis, Eigen::Index count) {
  const Eigen::Index n = basis.rows();
  if (basis.cols() + count > n) throw InputError("orthonormal_complement: not enough room");
  ComplexMatrix all(n, basis.cols() + count);
  Eigen::Index filled = basis.cols();
  all.leftCols(filled) = basis;
  for (Eigen::Index j = 0; j < n && filled < all.cols(); ++j) {
    ComplexVector v = ComplexVector::Unit(n, j);
    for (int pass = 0; pass < 2; ++pass) {
      const auto q = all.leftCols(filled);
      v -= q * (q.adjoint() * v);
    }
    const double norm = v.norm();
    if (norm > 1e-6) all.col(filled++) = v / norm;
  }
  if (filled != all.cols()) {
    throw NumericalError("orthonormal_complement: input columns are not independent");
  }
  return all.rightCols(count);
}

ComplexMatrix complete_orthonormal(const ComplexMatrix& basis) {
  ComplexMatrix out(basis.rows(), basis.rows());
  out.leftCols(basis.cols()) = basis;
  out.rightCols(basis.rows() - basis.cols()) =
      orthonormal_complement(basis, basis.rows() - basis.cols());
  return out;
}

ComplexMatrix orthonormalize(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

ComplexMatrix random_unitary(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(dim);
  ComplexMatrix z(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = Complex(re, im) / std::sqrt(2.0);
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex d = r(i, i);
    const double mag = std::abs(d);
    q.col(i) *= mag > 0.0 ? d / mag : Complex(1.0, 0.0);
  }
  return q;
}

ComplexMatrix choi_of_unitary(const ComplexMatrix& u) {
  const Eigen::Index d = u.rows();
  ComplexVector vec(d * u.cols());
  for (Eigen::Index w = 0; w < d; ++w) {
    for (Eigen::Index v = 0; v < u.cols(); ++v) vec(w * u.cols() + v) = u(w, v);
  }
  return vec * vec.adjoint();
}

ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0.0, -kI, kI, 0.0;
  return m;
}

ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

}  // namespace qcp
