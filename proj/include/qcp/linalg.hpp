#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qcp {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Ordered subsystem dimensions of a tensor-product space. Factor 0 is the
/// leftmost (most significant) factor of the Kronecker product.
struct TensorShape {
  std::vector<std::size_t> factor_dims;

  TensorShape() = default;
  explicit TensorShape(std::vector<std::size_t> dims);
  static TensorShape uniform(std::size_t factors, std::size_t dim);

  std::size_t size() const noexcept { return factor_dims.size(); }
  std::size_t total() const noexcept;
};

struct EigenPairs {
  ComplexVector values;
  ComplexMatrix vectors;  // columns are orthonormal eigenvectors
};

struct PsdReport {
  bool is_psd = false;
  double min_eigenvalue = 0.0;
};

struct GramFactorization {
  /// rank x n matrix whose columns f_i satisfy <f_i|f_j> = G_ij.
  ComplexMatrix factors;
  std::size_t rank = 0;
};

namespace tol {
inline constexpr double kUnitary = 1e-10;
inline constexpr double kHermitian = 1e-12;
inline constexpr double kNormality = 1e-10;
inline constexpr double kDegeneracy = 1e-8;
inline constexpr double kRank = 1e-10;
}  // namespace tol

/// Largest absolute entry.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : static_cast<double>(m.cwiseAbs().maxCoeff());
}

bool is_unitary(const ComplexMatrix& u, double tolerance = tol::kUnitary);
bool is_hermitian(const ComplexMatrix& m, double tolerance = tol::kHermitian);

/// Eigendecomposition of a normal matrix via its commuting Hermitian parts
/// (M + M^dagger)/2 and (M - M^dagger)/(2i). Degenerate clusters of the first
/// part are resolved by diagonalizing the second restricted to the cluster.
/// Throws InputError carrying the normality residual if M is not normal.
EigenPairs eig_normal(const ComplexMatrix& m, double normality_tol = tol::kNormality);

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
struct HermitianEigen {
  RealVector values;
  ComplexMatrix vectors;
};
HermitianEigen eig_hermitian(const ComplexMatrix& m);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexVector kron(const ComplexVector& a, const ComplexVector& b);

/// Traces out every factor not listed in `keep`. The kept factors appear in
/// their original relative order.
ComplexMatrix partial_trace(const ComplexMatrix& m, const TensorShape& shape,
                            std::span<const std::size_t> keep);

/// Reorders tensor factors: factor i of the result is factor perm[i] of the input.
ComplexMatrix permute_factors(const ComplexMatrix& m, const TensorShape& shape,
                              std::span<const std::size_t> perm);
ComplexVector permute_factors(const ComplexVector& v, const TensorShape& shape,
                              std::span<const std::size_t> perm);

/// Applies `op` (dim_k x dim_k) to tensor factor `factor` of the state vector.
ComplexVector apply_factor(const ComplexVector& v, const TensorShape& shape, std::size_t factor,
                           const ComplexMatrix& op);

/// exp(-i H dt) for Hermitian H, via the Hermitian eigendecomposition.
ComplexMatrix expm_skew(const ComplexMatrix& h, double dt);

PsdReport psd_check(const ComplexMatrix& m, double tolerance);

/// Factorizes a PSD Gram matrix as F^dagger F. Throws InputError when G has an
/// eigenvalue below -rank_tol.
GramFactorization gram_factor(const ComplexMatrix& g, double rank_tol = tol::kRank);

/// Gram matrix <v_i|v_j> of the columns of `vectors`.
ComplexMatrix gram_of(const ComplexMatrix& vectors);

/// Completes the orthonormal columns of `basis` (n x k) to an n x n unitary by
/// Gram-Schmidt against the standard basis.
ComplexMatrix complete_orthonormal(const ComplexMatrix& basis);

/// Returns `count` orthonormal columns orthogonal to the columns of `basis`.
ComplexMatrix orthonormal_complement(const ComplexMatrix& basis, Eigen::Index count);

/// Nearest matrix with orthonormal columns (polar factor).
ComplexMatrix orthonormalize(const ComplexMatrix& m);

/// Haar-distributed unitary from a seeded generator (QR of a complex Ginibre
/// matrix with the phase correction).
ComplexMatrix random_unitary(std::size_t dim, std::uint64_t seed);

/// Choi matrix |U>><<U| on W (x) V, with |U>> = sum_n U|n> (x) |n>.
ComplexMatrix choi_of_unitary(const ComplexMatrix& u);

ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();

}  // namespace qcp
