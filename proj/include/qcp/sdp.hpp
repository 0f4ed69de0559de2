#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qcp/linalg.hpp"
#include "qcp/spectral.hpp"
#include "qcp/strategy.hpp"

namespace qcp::sdp {

/// Upper-triangular entry (row <= col) of a symmetric coefficient matrix;
/// A(row, col) = A(col, row) = value.
struct Entry {
  std::size_t block = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

struct Constraint {
  std::vector<Entry> entries;
  double rhs = 0.0;
  std::string label;
};

/// minimize <C, X>  s.t.  <A_i, X> = b_i,  X = blkdiag(X_1, ...) PSD.
/// Dual: maximize b'y  s.t.  sum_i y_i A_i + Z = C,  Z PSD.
struct Problem {
  std::vector<std::size_t> blocks;
  std::vector<Entry> objective;
  std::vector<Constraint> constraints;

  std::size_t total_dim() const;
  std::size_t largest_block() const;
  void validate() const;
};

/// Sparse triplet dump: header lines start with '#', then one
/// "<constraint> <block> <row> <col> <value>" line per nonzero (constraint 0 is the
/// objective) and one "rhs <constraint> <value>" line per constraint.
void dump(const Problem& problem, std::ostream& out);

/// Throws InputError naming the dependent equality rows.
void presolve(const Problem& problem);

enum class Status { optimal, infeasible, max_iter };
std::string to_string(Status status);

struct Options {
  int max_iter = 200;
  double tol = 1e-9;
  double accept_feasibility = 1e-7;
  double accept_gap = 1e-6;
  double step_fraction = 0.98;
  std::size_t max_total_dim = 128;
};

struct Solution {
  std::vector<RealMatrix> x;
  std::vector<RealMatrix> z;
  RealVector y;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;              // primal_value - dual_value
  double primal_residual = 0.0;  // max |<A_i, X> - b_i|
  double dual_residual = 0.0;    // max entry of C - A'y - Z
  Status status = Status::max_iter;
  int iterations = 0;
};

Solution solve(const Problem& problem, const Options& options = {});

/// Contributes Re(coeff * X_var(i, j)) to a linear functional.
struct Term {
  std::size_t var = 0;
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  Complex coeff{1.0, 0.0};
};

/// Matrix-valued linear expression E(X): entries[p * dim + q] lists the terms with
/// E_pq = sum coeff * X_var(i, j).
struct MatrixExpr {
  Eigen::Index dim = 0;
  std::vector<std::vector<Term>> entries;

  explicit MatrixExpr(Eigen::Index d = 0)
      : dim(d), entries(static_cast<std::size_t>(d * d)) {}
  std::vector<Term>& at(Eigen::Index p, Eigen::Index q) {
    return entries[static_cast<std::size_t>(p * dim + q)];
  }
  const std::vector<Term>& at(Eigen::Index p, Eigen::Index q) const {
    return entries[static_cast<std::size_t>(p * dim + q)];
  }
  MatrixExpr& add(const MatrixExpr& other, Complex scale = {1.0, 0.0});
};

/// Complex/real PSD modeling layer compiled to the real standard form. Complex
/// Hermitian n x n blocks become real symmetric 2n x 2n blocks [[Re, -Im], [Im, Re]].
class Model {
 public:
  std::size_t add_hermitian(Eigen::Index n, std::string name);
  std::size_t add_symmetric(Eigen::Index n, std::string name);

  /// Objective is minimized.
  void add_objective(const Term& t);
  void add_equality(std::vector<Term> terms, double rhs, std::string label);
  /// Hermitian equality E(X) = rhs; one real row per independent real component.
  void add_matrix_equality(const MatrixExpr& expr, const ComplexMatrix& rhs, const std::string& label);

  MatrixExpr var(std::size_t v) const;
  /// Tr over factor `traced` of variable v, whose rows are laid out by `shape`.
  MatrixExpr partial_trace(std::size_t v, const TensorShape& shape, std::size_t traced) const;
  /// I_{identity_dim} (x) X_v
  MatrixExpr identity_kron(std::size_t v, Eigen::Index identity_dim) const;

  Problem compile() const;
  ComplexMatrix value(const Solution& s, std::size_t v) const;
  Eigen::Index dim(std::size_t v) const { return vars_[v].n; }

 private:
  struct Var {
    Eigen::Index n;
    bool complex;
    std::string name;
  };
  struct Row {
    std::vector<Term> terms;
    double rhs;
    std::string label;
  };
  std::vector<Entry> realify(const std::vector<Term>& terms) const;

  std::vector<Var> vars_;
  std::vector<Term> objective_;
  std::vector<Row> rows_;
};

/// Minimum-error discrimination of pure states with Gram matrix `gram` and priors,
/// solved in the span of the states.
struct DiscriminationResult {
  double value = 0.0;
  std::vector<ComplexMatrix> povm;  // in the span coordinates of the Gram factorization
  Solution solution;
};
DiscriminationResult min_error_discrimination_full(const ComplexMatrix& gram,
                                                   std::span<const double> priors,
                                                   const Options& options = {});
double min_error_discrimination(const ComplexMatrix& gram, std::span<const double> priors,
                                const Options& options = {});

/// Gram matrix of (U1|+>)^{(N-n)} (U0|+>)^{n}, |+> built from the closest-side eigenvectors.
ComplexMatrix separable_gram(const SpectralGap& gap, std::size_t n);
double separable_baseline(const SpectralGap& gap, std::size_t n, const Options& options = {});

/// Single-segment dual problem: minimize eta(Y) over the comb cone subject to
/// Y >= choi0/2 and Y >= choi1/2. Choi matrices live on W_R V_R ... W_1 V_1.
struct DyResult {
  ComplexMatrix y;
  double eta = 0.0;
  Solution solution;
};
DyResult solve_dy(const ComplexMatrix& choi0, const ComplexMatrix& choi1, std::size_t d,
                  std::size_t steps, const Options& options = {});

/// Tester optimization: variables D_m on W_T V_T ... W_1 V_1 plus the normalization
/// hierarchy tau^{(t)} on V_t W_{t-1} ... V_1.
struct TesterSdp {
  Model model;
  std::vector<std::size_t> d_vars;
  std::vector<std::size_t> tau_vars;  // tau_vars[t-1] holds tau^{(t)}
  std::size_t d = 2;
  std::size_t steps = 1;
  std::size_t hypotheses = 0;
};
TesterSdp build_tester_sdp(std::span<const ComplexMatrix> choi_list, std::size_t d, std::size_t steps,
                           std::size_t max_block = 32, std::size_t max_total = 128);

struct TesterResult {
  double value = 0.0;
  std::vector<ComplexMatrix> testers;
  Solution solution;
};
TesterResult solve_tester_sdp(std::span<const ComplexMatrix> choi_list, std::size_t d,
                              std::size_t steps, const Options& options = {});

/// (1/(M+1)) sum_n Re Tr(D_n^T E_n)
double tester_objective(std::span<const ComplexMatrix> testers, std::span<const ComplexMatrix> choi_list);

/// Outcome probability Tr(D^T E).
double tester_probability(const ComplexMatrix& tester, const ComplexMatrix& choi);

/// Max-entry residual of the tester normalization hierarchy, reconstructed top-down.
double tester_residual(std::span<const ComplexMatrix> testers, std::size_t d, std::size_t steps);

/// D_m = Pi_m^T (x) rho, reordered from (W_T..W_1, V_T..V_1) to W_T V_T ... W_1 V_1.
std::vector<ComplexMatrix> nonadaptive_tester(std::span<const ComplexMatrix> povm,
                                              const ComplexMatrix& rho, std::size_t d,
                                              std::size_t steps);

/// Testers realized by a full-space strategy with one step per segment.
std::vector<ComplexMatrix> strategy_tester(const ChangePointProblem& problem, const Strategy& strategy);

}  // namespace qcp::sdp
