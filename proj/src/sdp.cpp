#include "qcp/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <tuple>

#include <fmt/format.h>

#include "qcp/errors.hpp"

namespace qcp::sdp {

std::size_t Problem::total_dim() const {
  std::size_t t = 0;
  for (auto b : blocks) t += b;
  return t;
}

std::size_t Problem::largest_block() const {
  std::size_t t = 0;
  for (auto b : blocks) t = std::max(t, b);
  return t;
}

namespace {

void check_entry(const Problem& p, const Entry& e, const std::string& where) {
  if (e.block >= p.blocks.size()) throw InputError(fmt::format("sdp: {} refers to block {}", where, e.block));
  if (e.row > e.col || e.col >= p.blocks[e.block]) {
    throw InputError(fmt::format("sdp: {} has entry ({}, {}) outside the upper triangle of block {}", where, e.row,
                                 e.col, e.block));
  }
  if (!std::isfinite(e.value)) throw InputError(fmt::format("sdp: {} has a non-finite coefficient", where));
}

}  // namespace

void Problem::validate() const {
  if (blocks.empty()) throw InputError("sdp: no blocks");
  for (auto b : blocks) {
    if (b == 0) throw InputError("sdp: empty block");
  }
  for (const auto& e : objective) check_entry(*this, e, "objective");
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const auto& c = constraints[i];
    const std::string where = c.label.empty() ? fmt::format("constraint {}", i + 1) : c.label;
    if (c.entries.empty()) throw InputError(fmt::format("sdp: {} is empty", where));
    if (!std::isfinite(c.rhs)) throw InputError(fmt::format("sdp: {} has a non-finite right-hand side", where));
    for (const auto& e : c.entries) check_entry(*this, e, where);
  }
}

void dump(const Problem& problem, std::ostream& out) {
  out << "# sdp-triplets v1\n";
  out << "# blocks";
  for (auto b : problem.blocks) out << ' ' << b;
  out << '\n';
  out << fmt::format("# constraints {}\n", problem.constraints.size());
  for (const auto& e : problem.objective) {
    out << fmt::format("0 {} {} {} {:.17g}\n", e.block, e.row, e.col, e.value);
  }
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    for (const auto& e : problem.constraints[i].entries) {
      out << fmt::format("{} {} {} {} {:.17g}\n", i + 1, e.block, e.row, e.col, e.value);
    }
  }
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    out << fmt::format("rhs {} {:.17g}\n", i + 1, problem.constraints[i].rhs);
  }
}

void presolve(const Problem& problem) {
  problem.validate();
  const std::size_t m = problem.constraints.size();
  if (m == 0) return;
  std::vector<std::size_t> offset(problem.blocks.size() + 1, 0);
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
    offset[b + 1] = offset[b] + problem.blocks[b] * (problem.blocks[b] + 1) / 2;
  }
  // columns are the constraints in svec coordinates
  RealMatrix a = RealMatrix::Zero(static_cast<Eigen::Index>(offset.back()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& e : problem.constraints[i].entries) {
      const std::size_t n = problem.blocks[e.block];
      const std::size_t idx = offset[e.block] + e.row * n - e.row * (e.row - 1) / 2 + (e.col - e.row);
      a(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(i)) += e.value * (e.row == e.col ? 1.0 : std::sqrt(2.0));
    }
  }
  Eigen::ColPivHouseholderQR<RealMatrix> qr(a);
  qr.setThreshold(1e-10);
  const auto rank = static_cast<std::size_t>(qr.rank());
  if (rank == m) return;
  std::vector<std::size_t> dependent;
  const auto& perm = qr.colsPermutation().indices();
  for (std::size_t k = rank; k < m; ++k) dependent.push_back(static_cast<std::size_t>(perm(static_cast<Eigen::Index>(k))));
  std::sort(dependent.begin(), dependent.end());
  std::string names;
  for (std::size_t k = 0; k < dependent.size() && k < 8; ++k) {
    const auto& c = problem.constraints[dependent[k]];
    if (!names.empty()) names += ", ";
    names += c.label.empty() ? fmt::format("#{}", dependent[k] + 1) : c.label;
  }
  if (dependent.size() > 8) names += ", ...";
  throw InputError(fmt::format("sdp: {} linearly dependent constraint(s): {}", dependent.size(), names));
}

std::string to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::max_iter: return "max_iter";
  }
  return "unknown";
}

namespace {

using Blocks = std::vector<RealMatrix>;

struct Local {
  std::size_t row;
  std::size_t col;
  double value;
};

struct Data {
  std::vector<Eigen::Index> dims;
  Blocks c;
  RealVector b;
  // by_block[k] lists (constraint, entries restricted to block k)
  std::vector<std::vector<std::pair<std::size_t, std::vector<Local>>>> by_block;
};

Data prepare(const Problem& p) {
  Data d;
  for (auto n : p.blocks) {
    d.dims.push_back(static_cast<Eigen::Index>(n));
    d.c.push_back(RealMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  }
  for (const auto& e : p.objective) {
    auto& m = d.c[e.block];
    const auto r = static_cast<Eigen::Index>(e.row), c = static_cast<Eigen::Index>(e.col);
    m(r, c) += e.value;
    if (r != c) m(c, r) += e.value;
  }
  d.b.resize(static_cast<Eigen::Index>(p.constraints.size()));
  d.by_block.resize(p.blocks.size());
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    d.b(static_cast<Eigen::Index>(i)) = p.constraints[i].rhs;
    std::map<std::size_t, std::vector<Local>> grouped;
    for (const auto& e : p.constraints[i].entries) grouped[e.block].push_back({e.row, e.col, e.value});
    for (auto& [blk, list] : grouped) d.by_block[blk].emplace_back(i, std::move(list));
  }
  return d;
}

double inner_sparse(const std::vector<Local>& ent, const RealMatrix& m) {
  double s = 0.0;
  for (const auto& e : ent) {
    const auto r = static_cast<Eigen::Index>(e.row), c = static_cast<Eigen::Index>(e.col);
    s += e.value * (r == c ? m(r, r) : m(r, c) + m(c, r));
  }
  return s;
}

RealVector apply_a(const Data& d, const Blocks& x) {
  RealVector out = RealVector::Zero(d.b.size());
  for (std::size_t k = 0; k < d.by_block.size(); ++k) {
    for (const auto& [i, ent] : d.by_block[k]) out(static_cast<Eigen::Index>(i)) += inner_sparse(ent, x[k]);
  }
  return out;
}

Blocks apply_at(const Data& d, const RealVector& y) {
  Blocks out;
  for (auto n : d.dims) out.push_back(RealMatrix::Zero(n, n));
  for (std::size_t k = 0; k < d.by_block.size(); ++k) {
    for (const auto& [i, ent] : d.by_block[k]) {
      const double yi = y(static_cast<Eigen::Index>(i));
      for (const auto& e : ent) {
        const auto r = static_cast<Eigen::Index>(e.row), c = static_cast<Eigen::Index>(e.col);
        out[k](r, c) += yi * e.value;
        if (r != c) out[k](c, r) += yi * e.value;
      }
    }
  }
  return out;
}

double dot(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double fro(const Blocks& a) {
  double s = 0.0;
  for (const auto& m : a) s += m.squaredNorm();
  return std::sqrt(s);
}

double max_entry(const Blocks& a) {
  double s = 0.0;
  for (const auto& m : a) s = std::max(s, max_abs(m));
  return s;
}

RealMatrix sym(const RealMatrix& m) { return 0.5 * (m + m.transpose()); }

struct Scaling {
  RealMatrix lx;    // chol(X)
  RealMatrix g;     // W = G G'
  RealMatrix ginv;
  RealMatrix w;
  RealVector dv;    // scaled point D = G^{-1} X G^{-T} = G' Z G
};

bool nt_scaling(const RealMatrix& x, const RealMatrix& z, Scaling& s) {
  Eigen::LLT<RealMatrix> llt(x);
  if (llt.info() != Eigen::Success) return false;
  s.lx = llt.matrixL();
  const RealMatrix t = sym(s.lx.transpose() * z * s.lx);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(t);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) return false;
  const RealVector lam = es.eigenvalues();
  const RealVector q4 = lam.array().pow(-0.25);
  s.g = s.lx * es.eigenvectors() * q4.asDiagonal();
  const RealMatrix lxinv = s.lx.triangularView<Eigen::Lower>().solve(RealMatrix::Identity(x.rows(), x.cols()));
  s.ginv = lam.array().pow(0.25).matrix().asDiagonal() * es.eigenvectors().transpose() * lxinv;
  s.w = sym(s.g * s.g.transpose());
  s.dv = lam.array().sqrt();
  return true;
}

double max_step(const RealMatrix& x, const RealMatrix& dx) {
  Eigen::LLT<RealMatrix> llt(x);
  const RealMatrix l = llt.matrixL();
  const RealMatrix a = l.triangularView<Eigen::Lower>().solve(dx);
  const RealMatrix b = l.triangularView<Eigen::Lower>().solve(RealMatrix(a.transpose()));
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym(b), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

struct Direction {
  Blocks dx, dz;
  RealVector dy;
};

}  // namespace

Solution solve(const Problem& problem, const Options& options) {
  problem.validate();
  if (problem.total_dim() > options.max_total_dim) {
    throw InputError(fmt::format("sdp: total block dimension {} exceeds the budget {}", problem.total_dim(),
                                 options.max_total_dim));
  }
  presolve(problem);
  const Data d = prepare(problem);
  const auto m = d.b.size();
  const std::size_t nb = d.dims.size();
  double n_total = 0.0;
  for (auto n : d.dims) n_total += static_cast<double>(n);

  // initial point
  double norm_c = fro(d.c);
  double xi_p = 10.0, xi_d = std::max(10.0, norm_c);
  {
    std::vector<double> anorm(static_cast<std::size_t>(m), 0.0);
    for (const auto& list : d.by_block) {
      for (const auto& [i, ent] : list) {
        for (const auto& e : ent) anorm[i] += e.value * e.value * (e.row == e.col ? 1.0 : 2.0);
      }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      const double an = std::sqrt(anorm[static_cast<std::size_t>(i)]);
      xi_p = std::max(xi_p, n_total * (1.0 + std::abs(d.b(i))) / (1.0 + an));
      xi_d = std::max(xi_d, an);
    }
    xi_p = std::max(xi_p, std::sqrt(n_total));
    xi_d = std::max(xi_d, std::sqrt(n_total));
  }
  Blocks x, z;
  for (auto n : d.dims) {
    x.push_back(xi_p * RealMatrix::Identity(n, n));
    z.push_back(xi_d * RealMatrix::Identity(n, n));
  }
  RealVector y = RealVector::Zero(m);
  const double norm_b = d.b.norm();

  Solution sol;
  int it = 0;
  int stall = 0;
  double best_merit = std::numeric_limits<double>::infinity();
  for (; it <= options.max_iter; ++it) {
    const RealVector rp = d.b - apply_a(d, x);
    Blocks rd = apply_at(d, y);
    for (std::size_t k = 0; k < nb; ++k) rd[k] = d.c[k] - rd[k] - z[k];
    const double pobj = dot(d.c, x);
    const double dobj = d.b.dot(y);
    const double mu = dot(x, z) / n_total;
    const double relp = rp.norm() / (1.0 + norm_b);
    const double reld = fro(rd) / (1.0 + norm_c);
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    sol.primal_value = pobj;
    sol.dual_value = dobj;
    sol.gap = pobj - dobj;
    sol.primal_residual = m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0;
    sol.dual_residual = max_entry(rd);
    sol.iterations = it;

    if (relp <= options.tol && reld <= options.tol && relgap <= options.tol) {
      sol.status = Status::optimal;
      break;
    }
    const double big = 1e12;
    if (max_entry(x) > big || max_entry(z) > big || (m > 0 && y.cwiseAbs().maxCoeff() > big)) {
      sol.status = Status::infeasible;
      break;
    }
    const double merit = std::max({relp, reld, relgap});
    if (merit < 0.5 * best_merit) {
      best_merit = merit;
      stall = 0;
    } else if (++stall > 15) {
      break;
    }
    if (it == options.max_iter) break;

    std::vector<Scaling> sc(nb);
    bool ok = true;
    for (std::size_t k = 0; k < nb && ok; ++k) ok = nt_scaling(x[k], z[k], sc[k]);
    if (!ok) break;

    // Schur complement
    RealMatrix schur = RealMatrix::Zero(m, m);
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& w = sc[k].w;
      const auto n = d.dims[k];
      for (const auto& [j, ent_j] : d.by_block[k]) {
        RealMatrix bj = RealMatrix::Zero(n, n);
        for (const auto& e : ent_j) {
          const auto r = static_cast<Eigen::Index>(e.row), c = static_cast<Eigen::Index>(e.col);
          if (r == c) {
            bj.noalias() += e.value * w.col(r) * w.col(r).transpose();
          } else {
            const RealMatrix t = e.value * w.col(r) * w.col(c).transpose();
            bj += t + t.transpose();
          }
        }
        for (const auto& [i, ent_i] : d.by_block[k]) {
          schur(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += inner_sparse(ent_i, bj);
        }
      }
    }
    schur = sym(schur);
    Eigen::LLT<RealMatrix> chol(schur);
    Eigen::LDLT<RealMatrix> ldlt;
    const bool use_llt = chol.info() == Eigen::Success;
    if (!use_llt) ldlt.compute(schur);

    Blocks wrdw(nb);
    for (std::size_t k = 0; k < nb; ++k) wrdw[k] = sym(sc[k].w * rd[k] * sc[k].w);
    const RealVector a_wrdw = apply_a(d, wrdw);

    auto direction = [&](const std::vector<RealMatrix>& rhs_scaled) {
      Direction dir;
      Blocks kmat(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        const auto& dv = sc[k].dv;
        const RealMatrix& r = rhs_scaled[k];
        RealMatrix t(r.rows(), r.cols());
        for (Eigen::Index a = 0; a < r.rows(); ++a) {
          for (Eigen::Index b = 0; b < r.cols(); ++b) t(a, b) = 2.0 * r(a, b) / (dv(a) + dv(b));
        }
        kmat[k] = sym(sc[k].g * t * sc[k].g.transpose());
      }
      const RealVector rhs = rp - apply_a(d, kmat) + a_wrdw;
      dir.dy = use_llt ? RealVector(chol.solve(rhs)) : RealVector(ldlt.solve(rhs));
      const Blocks aty = apply_at(d, dir.dy);
      dir.dz.resize(nb);
      dir.dx.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        dir.dz[k] = sym(rd[k] - aty[k]);
        dir.dx[k] = sym(kmat[k] - sc[k].w * dir.dz[k] * sc[k].w);
      }
      return dir;
    };
    auto steps = [&](const Direction& dir) {
      double ap = std::numeric_limits<double>::infinity(), ad = ap;
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(x[k], dir.dx[k]));
        ad = std::min(ad, max_step(z[k], dir.dz[k]));
      }
      return std::pair{ap, ad};
    };

    // predictor
    std::vector<RealMatrix> r_aff(nb);
    for (std::size_t k = 0; k < nb; ++k) r_aff[k] = -RealMatrix(sc[k].dv.array().square().matrix().asDiagonal());
    const Direction aff = direction(r_aff);
    auto [ap_aff, ad_aff] = steps(aff);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      mu_aff += (x[k] + ap_aff * aff.dx[k]).cwiseProduct(z[k] + ad_aff * aff.dz[k]).sum();
    }
    mu_aff /= n_total;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // corrector
    std::vector<RealMatrix> r_cor(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      const RealMatrix dxs = sc[k].ginv * aff.dx[k] * sc[k].ginv.transpose();
      const RealMatrix dzs = sc[k].g.transpose() * aff.dz[k] * sc[k].g;
      const auto n = d.dims[k];
      r_cor[k] = sigma * mu * RealMatrix::Identity(n, n) -
                 RealMatrix(sc[k].dv.array().square().matrix().asDiagonal()) - sym(dxs * dzs);
    }
    const Direction dir = direction(r_cor);
    auto [ap, ad] = steps(dir);
    ap = std::min(1.0, options.step_fraction * ap);
    ad = std::min(1.0, options.step_fraction * ad);
    if (ap < 1e-12 && ad < 1e-12) break;
    for (std::size_t k = 0; k < nb; ++k) {
      x[k] = sym(x[k] + ap * dir.dx[k]);
      z[k] = sym(z[k] + ad * dir.dz[k]);
    }
    y += ad * dir.dy;
  }

  if (sol.status != Status::optimal && sol.status != Status::infeasible) {
    if (sol.primal_residual <= options.accept_feasibility && sol.dual_residual <= options.accept_feasibility &&
        std::abs(sol.gap) <= options.accept_gap) {
      sol.status = Status::optimal;
    }
  }
  sol.x = std::move(x);
  sol.z = std::move(z);
  sol.y = std::move(y);
  return sol;
}

MatrixExpr& MatrixExpr::add(const MatrixExpr& other, Complex scale) {
  if (other.dim != dim) throw InputError(fmt::format("sdp: adding expressions of size {} and {}", dim, other.dim));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    for (auto t : other.entries[k]) {
      t.coeff *= scale;
      entries[k].push_back(t);
    }
  }
  return *this;
}

std::size_t Model::add_hermitian(Eigen::Index n, std::string name) {
  if (n <= 0) throw InputError("sdp: variable dimension must be positive");
  vars_.push_back({n, true, std::move(name)});
  return vars_.size() - 1;
}

std::size_t Model::add_symmetric(Eigen::Index n, std::string name) {
  if (n <= 0) throw InputError("sdp: variable dimension must be positive");
  vars_.push_back({n, false, std::move(name)});
  return vars_.size() - 1;
}

void Model::add_objective(const Term& t) { objective_.push_back(t); }

void Model::add_equality(std::vector<Term> terms, double rhs, std::string label) {
  rows_.push_back({std::move(terms), rhs, std::move(label)});
}

void Model::add_matrix_equality(const MatrixExpr& expr, const ComplexMatrix& rhs, const std::string& label) {
  if (rhs.rows() != expr.dim || rhs.cols() != expr.dim) {
    throw InputError(fmt::format("sdp: {}: right-hand side is {}x{}, expression is {}", label, rhs.rows(), rhs.cols(),
                                 expr.dim));
  }
  for (Eigen::Index p = 0; p < expr.dim; ++p) {
    for (Eigen::Index q = p; q < expr.dim; ++q) {
      add_equality(expr.at(p, q), rhs(p, q).real(), fmt::format("{}[{},{}].re", label, p, q));
      if (p == q) continue;
      std::vector<Term> im = expr.at(p, q);
      for (auto& t : im) t.coeff *= Complex{0.0, -1.0};
      add_equality(std::move(im), rhs(p, q).imag(), fmt::format("{}[{},{}].im", label, p, q));
    }
  }
}

MatrixExpr Model::var(std::size_t v) const {
  const auto n = vars_.at(v).n;
  MatrixExpr e(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index q = 0; q < n; ++q) e.at(p, q).push_back({v, p, q, {1.0, 0.0}});
  }
  return e;
}

MatrixExpr Model::partial_trace(std::size_t v, const TensorShape& shape, std::size_t traced) const {
  const auto n = vars_.at(v).n;
  if (static_cast<Eigen::Index>(shape.total()) != n || traced >= shape.size()) {
    throw InputError("sdp: partial trace shape does not match the variable");
  }
  const auto dt = static_cast<Eigen::Index>(shape.factor_dims[traced]);
  Eigen::Index stride = 1;
  for (std::size_t f = traced + 1; f < shape.size(); ++f) stride *= static_cast<Eigen::Index>(shape.factor_dims[f]);
  const Eigen::Index out = n / dt;
  auto full = [&](Eigen::Index idx, Eigen::Index a) { return (idx / stride) * dt * stride + a * stride + idx % stride; };
  MatrixExpr e(out);
  for (Eigen::Index p = 0; p < out; ++p) {
    for (Eigen::Index q = 0; q < out; ++q) {
      for (Eigen::Index a = 0; a < dt; ++a) e.at(p, q).push_back({v, full(p, a), full(q, a), {1.0, 0.0}});
    }
  }
  return e;
}

MatrixExpr Model::identity_kron(std::size_t v, Eigen::Index identity_dim) const {
  const auto n = vars_.at(v).n;
  MatrixExpr e(identity_dim * n);
  for (Eigen::Index a = 0; a < identity_dim; ++a) {
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = 0; q < n; ++q) e.at(a * n + p, a * n + q).push_back({v, p, q, {1.0, 0.0}});
    }
  }
  return e;
}

std::vector<Entry> Model::realify(const std::vector<Term>& terms) const {
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> acc;
  auto put = [&](std::size_t blk, Eigen::Index r, Eigen::Index c, double v) {
    if (v == 0.0) return;
    const auto lo = static_cast<std::size_t>(std::min(r, c)), hi = static_cast<std::size_t>(std::max(r, c));
    acc[{blk, lo, hi}] += (r == c) ? v : 0.5 * v;
  };
  for (const auto& t : terms) {
    const auto& var = vars_.at(t.var);
    if (t.i < 0 || t.j < 0 || t.i >= var.n || t.j >= var.n) {
      throw InputError(fmt::format("sdp: index ({}, {}) outside variable {}", t.i, t.j, var.name));
    }
    const double ar = t.coeff.real(), ai = t.coeff.imag();
    if (var.complex) {
      const auto n = var.n;
      put(t.var, t.i, t.j, 0.5 * ar);
      put(t.var, n + t.i, n + t.j, 0.5 * ar);
      put(t.var, n + t.i, t.j, -0.5 * ai);
      put(t.var, t.i, n + t.j, 0.5 * ai);
    } else {
      put(t.var, t.i, t.j, ar);
    }
  }
  std::vector<Entry> out;
  for (const auto& [key, v] : acc) {
    if (std::abs(v) < 1e-15) continue;
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
  }
  return out;
}

Problem Model::compile() const {
  Problem p;
  for (const auto& v : vars_) p.blocks.push_back(static_cast<std::size_t>(v.complex ? 2 * v.n : v.n));
  p.objective = realify(objective_);
  for (const auto& row : rows_) {
    auto entries = realify(row.terms);
    if (entries.empty()) {
      if (std::abs(row.rhs) > 1e-12) throw InputError(fmt::format("sdp: {} reads 0 = {}", row.label, row.rhs));
      continue;
    }
    p.constraints.push_back({std::move(entries), row.rhs, row.label});
  }
  return p;
}

ComplexMatrix Model::value(const Solution& s, std::size_t v) const {
  const auto& var = vars_.at(v);
  const RealMatrix& x = s.x.at(v);
  if (!var.complex) return x.cast<Complex>();
  const auto n = var.n;
  const RealMatrix re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  const RealMatrix im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  ComplexMatrix out(n, n);
  out.real() = re;
  out.imag() = im;
  return out;
}

namespace {

void require_optimal(const Solution& s, const std::string& what) {
  if (s.status != Status::optimal) {
    throw NumericalError(fmt::format("{}: solver finished with status {} (gap {:.3e}, primal residual {:.3e})", what,
                                     to_string(s.status), s.gap, s.primal_residual),
                         std::max(std::abs(s.gap), s.primal_residual));
  }
}

// maximization value reported as the midpoint of the primal and dual bounds
double max_value(const Solution& s) { return -0.5 * (s.primal_value + s.dual_value); }

}  // namespace

DiscriminationResult min_error_discrimination_full(const ComplexMatrix& gram, std::span<const double> priors,
                                                   const Options& options) {
  const Eigen::Index n = gram.rows();
  if (n == 0 || gram.cols() != n) throw InputError("min_error_discrimination: Gram matrix must be square");
  if (static_cast<Eigen::Index>(priors.size()) != n) throw InputError("min_error_discrimination: one prior per state");
  for (double p : priors) {
    if (!(p >= 0.0)) throw InputError("min_error_discrimination: priors must be nonnegative");
  }
  if (!is_hermitian(gram, 1e-10)) throw InputError("min_error_discrimination: Gram matrix is not Hermitian");

  const bool real = max_abs(RealMatrix(gram.imag())) <= 1e-14;
  ComplexMatrix f;
  if (real) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(RealMatrix(gram.real()));
    if (es.eigenvalues().minCoeff() < -1e-10) throw InputError("min_error_discrimination: Gram matrix is not PSD");
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (es.eigenvalues()(i) > tol::kRank) kept.push_back(i);
    }
    RealMatrix fr(static_cast<Eigen::Index>(kept.size()), n);
    for (std::size_t r = 0; r < kept.size(); ++r) {
      fr.row(static_cast<Eigen::Index>(r)) =
          std::sqrt(es.eigenvalues()(kept[r])) * es.eigenvectors().col(kept[r]).transpose();
    }
    f = fr.cast<Complex>();
  } else {
    f = gram_factor(gram).factors;
  }
  const Eigen::Index r = f.rows();
  if (r == 0) throw InputError("min_error_discrimination: all states vanish");

  Model model;
  std::vector<std::size_t> vars;
  MatrixExpr total(r);
  for (Eigen::Index i = 0; i < n; ++i) {
    vars.push_back(real ? model.add_symmetric(r, fmt::format("Pi{}", i)) : model.add_hermitian(r, fmt::format("Pi{}", i)));
    total.add(model.var(vars.back()));
    const ComplexMatrix rho = f.col(i) * f.col(i).adjoint();
    for (Eigen::Index j = 0; j < r; ++j) {
      for (Eigen::Index k = 0; k < r; ++k) {
        const Complex c = -priors[static_cast<std::size_t>(i)] * rho(k, j);
        if (std::abs(c) > 1e-15) model.add_objective({vars.back(), j, k, c});
      }
    }
  }
  model.add_matrix_equality(total, ComplexMatrix::Identity(r, r), "completeness");
  DiscriminationResult res;
  res.solution = solve(model.compile(), options);
  require_optimal(res.solution, "min_error_discrimination");
  res.value = max_value(res.solution);
  for (auto v : vars) res.povm.push_back(model.value(res.solution, v));
  return res;
}

double min_error_discrimination(const ComplexMatrix& gram, std::span<const double> priors, const Options& options) {
  return min_error_discrimination_full(gram, priors, options).value;
}

ComplexMatrix separable_gram(const SpectralGap& gap, std::size_t n) {
  const Complex c = 0.5 * (gap.lambda0 + gap.lambda1);
  const auto size = static_cast<Eigen::Index>(n + 1);
  ComplexMatrix g(size, size);
  for (Eigen::Index a = 0; a < size; ++a) {
    for (Eigen::Index b = 0; b < size; ++b) {
      if (a == b) {
        g(a, b) = 1.0;
      } else if (a < b) {
        g(a, b) = std::pow(std::conj(c), static_cast<int>(b - a));
      } else {
        g(a, b) = std::pow(c, static_cast<int>(a - b));
      }
    }
  }
  return g;
}

double separable_baseline(const SpectralGap& gap, std::size_t n, const Options& options) {
  if (n == 0) throw InputError("separable_baseline: N must be positive");
  const double overlap = std::abs(0.5 * (gap.lambda0 + gap.lambda1));
  if (gap.origin_enclosed || overlap < 1e-15) return 1.0;
  // diagonal phases make the Gram matrix real without changing the optimum
  const auto size = static_cast<Eigen::Index>(n + 1);
  ComplexMatrix g(size, size);
  for (Eigen::Index a = 0; a < size; ++a) {
    for (Eigen::Index b = 0; b < size; ++b) g(a, b) = std::pow(overlap, static_cast<double>(std::abs(a - b)));
  }
  const std::vector<double> priors(n + 1, 1.0 / static_cast<double>(n + 1));
  return min_error_discrimination(g, priors, options);
}

namespace {

Eigen::Index ipow(std::size_t base, std::size_t e) {
  Eigen::Index r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= static_cast<Eigen::Index>(base);
  return r;
}

}  // namespace

DyResult solve_dy(const ComplexMatrix& choi0, const ComplexMatrix& choi1, std::size_t d, std::size_t steps,
                  const Options& options) {
  if (d < 2 || steps < 1) throw InputError("solve_dy: need d >= 2 and at least one step");
  const Eigen::Index dim = ipow(d, 2 * steps);
  if (choi0.rows() != dim || choi0.cols() != dim || choi1.rows() != dim || choi1.cols() != dim) {
    throw InputError(fmt::format("solve_dy: Choi matrices must be {}x{}", dim, dim));
  }
  const auto di = static_cast<Eigen::Index>(d);
  Model model;
  const auto s0 = model.add_hermitian(dim, "S0");
  const auto s1 = model.add_hermitian(dim, "S1");
  std::vector<std::size_t> tau;
  for (std::size_t t = 1; t < steps; ++t) tau.push_back(model.add_hermitian(ipow(d, 2 * t), fmt::format("tau{}", t)));
  const auto eta = model.add_symmetric(1, "eta");
  auto lower = [&](std::size_t t) { return t == 1 ? eta : tau[t - 2]; };  // tau^{(t-1)}, or eta

  MatrixExpr diff = model.var(s0);
  diff.add(model.var(s1), -1.0);
  model.add_matrix_equality(diff, 0.5 * (choi1 - choi0), "split");

  const TensorShape top = TensorShape::uniform(2 * steps, d);
  MatrixExpr e_top = model.partial_trace(s0, top, 0);
  e_top.add(model.identity_kron(lower(steps), di), -1.0);
  std::vector<std::size_t> keep;
  for (std::size_t f = 1; f < 2 * steps; ++f) keep.push_back(f);
  model.add_matrix_equality(e_top, -0.5 * partial_trace(choi0, top, keep), fmt::format("comb{}", steps));
  for (std::size_t t = steps - 1; t >= 1; --t) {
    MatrixExpr e = model.partial_trace(tau[t - 1], TensorShape::uniform(2 * t, d), 0);
    e.add(model.identity_kron(lower(t), di), -1.0);
    model.add_matrix_equality(e, ComplexMatrix::Zero(e.dim, e.dim), fmt::format("comb{}", t));
  }
  model.add_objective({eta, 0, 0, {1.0, 0.0}});

  DyResult res;
  res.solution = solve(model.compile(), options);
  require_optimal(res.solution, "solve_dy");
  res.y = model.value(res.solution, s0) + 0.5 * choi0;
  res.y = 0.5 * (res.y + res.y.adjoint()).eval();
  res.eta = 0.5 * (res.solution.primal_value + res.solution.dual_value);
  return res;
}

TesterSdp build_tester_sdp(std::span<const ComplexMatrix> choi_list, std::size_t d, std::size_t steps,
                           std::size_t max_block, std::size_t max_total) {
  if (choi_list.size() < 2) throw InputError("tester sdp: need at least two hypotheses");
  if (d < 2 || steps < 1) throw InputError("tester sdp: need d >= 2 and at least one step");
  const Eigen::Index dim = ipow(d, 2 * steps);
  for (const auto& c : choi_list) {
    if (c.rows() != dim || c.cols() != dim) throw InputError(fmt::format("tester sdp: Choi matrices must be {}x{}", dim, dim));
  }
  std::size_t total = choi_list.size() * 2 * static_cast<std::size_t>(dim);
  for (std::size_t t = 1; t <= steps; ++t) total += 2 * static_cast<std::size_t>(ipow(d, 2 * t - 1));
  if (2 * static_cast<std::size_t>(dim) > max_block || total > max_total) {
    throw InputError(fmt::format("tester sdp: {} testers of real size {} (total {}) exceed the budget (block {}, total {})",
                                 choi_list.size(), 2 * dim, total, max_block, max_total));
  }
  const auto di = static_cast<Eigen::Index>(d);
  TesterSdp sdp;
  sdp.d = d;
  sdp.steps = steps;
  sdp.hypotheses = choi_list.size();
  auto& model = sdp.model;
  for (std::size_t m = 0; m < choi_list.size(); ++m) sdp.d_vars.push_back(model.add_hermitian(dim, fmt::format("D{}", m)));
  for (std::size_t t = 1; t <= steps; ++t) sdp.tau_vars.push_back(model.add_hermitian(ipow(d, 2 * t - 1), fmt::format("tau{}", t)));

  MatrixExpr sum(dim);
  for (auto v : sdp.d_vars) sum.add(model.var(v));
  sum.add(model.identity_kron(sdp.tau_vars[steps - 1], di), -1.0);
  model.add_matrix_equality(sum, ComplexMatrix::Zero(dim, dim), "sum");
  for (std::size_t t = steps; t >= 2; --t) {
    MatrixExpr e = model.partial_trace(sdp.tau_vars[t - 1], TensorShape::uniform(2 * t - 1, d), 0);
    e.add(model.identity_kron(sdp.tau_vars[t - 2], di), -1.0);
    model.add_matrix_equality(e, ComplexMatrix::Zero(e.dim, e.dim), fmt::format("tau{}", t));
  }
  std::vector<Term> trace;
  for (Eigen::Index i = 0; i < di; ++i) trace.push_back({sdp.tau_vars[0], i, i, {1.0, 0.0}});
  model.add_equality(std::move(trace), 1.0, "normalization");

  const double w = 1.0 / static_cast<double>(choi_list.size());
  for (std::size_t m = 0; m < choi_list.size(); ++m) {
    const auto& e = choi_list[m];
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        if (std::abs(e(i, j)) > 1e-15) model.add_objective({sdp.d_vars[m], i, j, -w * e(i, j)});
      }
    }
  }
  return sdp;
}

TesterResult solve_tester_sdp(std::span<const ComplexMatrix> choi_list, std::size_t d, std::size_t steps,
                              const Options& options) {
  const TesterSdp sdp = build_tester_sdp(choi_list, d, steps, 32, options.max_total_dim);
  TesterResult res;
  res.solution = solve(sdp.model.compile(), options);
  require_optimal(res.solution, "tester sdp");
  res.value = max_value(res.solution);
  for (auto v : sdp.d_vars) res.testers.push_back(sdp.model.value(res.solution, v));
  return res;
}

double tester_probability(const ComplexMatrix& tester, const ComplexMatrix& choi) {
  if (tester.rows() != choi.rows() || tester.cols() != choi.cols()) {
    throw InputError("tester_probability: size mismatch");
  }
  return tester.cwiseProduct(choi).sum().real();
}

double tester_objective(std::span<const ComplexMatrix> testers, std::span<const ComplexMatrix> choi_list) {
  if (testers.size() != choi_list.size() || testers.empty()) throw InputError("tester_objective: one tester per hypothesis");
  double s = 0.0;
  for (std::size_t m = 0; m < testers.size(); ++m) s += tester_probability(testers[m], choi_list[m]);
  return s / static_cast<double>(testers.size());
}

double tester_residual(std::span<const ComplexMatrix> testers, std::size_t d, std::size_t steps) {
  if (testers.empty()) throw InputError("tester_residual: no testers");
  ComplexMatrix s = ComplexMatrix::Zero(testers.front().rows(), testers.front().cols());
  for (const auto& t : testers) s += t;
  const auto di = static_cast<Eigen::Index>(d);
  double res = 0.0;
  for (std::size_t t = steps; t >= 1; --t) {
    const TensorShape shape = TensorShape::uniform(2 * t, d);
    if (s.rows() != static_cast<Eigen::Index>(shape.total())) throw InputError("tester_residual: size mismatch");
    std::vector<std::size_t> keep;
    for (std::size_t f = 1; f < 2 * t; ++f) keep.push_back(f);
    const ComplexMatrix tau = partial_trace(s, shape, keep) / static_cast<double>(d);
    res = std::max(res, max_abs(ComplexMatrix(s - kron(ComplexMatrix::Identity(di, di), tau))));
    std::vector<std::size_t> rest;
    for (std::size_t f = 1; f < 2 * t - 1; ++f) rest.push_back(f);
    s = partial_trace(tau, TensorShape::uniform(2 * t - 1, d), rest);
  }
  res = std::max(res, std::abs(s(0, 0) - 1.0));
  return res;
}

std::vector<ComplexMatrix> nonadaptive_tester(std::span<const ComplexMatrix> povm, const ComplexMatrix& rho,
                                              std::size_t d, std::size_t steps) {
  const Eigen::Index half = ipow(d, steps);
  if (rho.rows() != half || rho.cols() != half) throw InputError("nonadaptive_tester: input state has the wrong size");
  std::vector<std::size_t> perm(2 * steps);
  for (std::size_t j = 0; j < steps; ++j) {
    perm[2 * j] = j;
    perm[2 * j + 1] = steps + j;
  }
  const TensorShape shape = TensorShape::uniform(2 * steps, d);
  std::vector<ComplexMatrix> out;
  for (const auto& p : povm) {
    if (p.rows() != half || p.cols() != half) throw InputError("nonadaptive_tester: POVM element has the wrong size");
    out.push_back(permute_factors(kron(ComplexMatrix(p.transpose()), rho), shape, perm));
  }
  return out;
}

std::vector<ComplexMatrix> strategy_tester(const ChangePointProblem& problem, const Strategy& strategy) {
  if (problem.r() != 1) throw InputError("strategy_tester: only one step per segment is supported");
  if (strategy.effective_space) throw InputError("strategy_tester: needs a full-space strategy");
  const std::size_t n = problem.n();
  ComplexMatrix u = ComplexMatrix::Ones(1, 1);
  for (std::size_t k = n; k >= 1; --k) u = kron(u, problem.segments[k - 1][0].u0);
  const auto size = u.rows();
  std::vector<ComplexMatrix> povm;
  ComplexMatrix rest = ComplexMatrix::Identity(size, size);
  for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(n); ++m) {
    const ComplexMatrix pm = strategy.measurement.col(m) * strategy.measurement.col(m).adjoint();
    rest -= pm;
    povm.push_back(u * pm * u.adjoint());
  }
  povm.push_back(u * rest * u.adjoint());
  const ComplexMatrix rho = strategy.input_state * strategy.input_state.adjoint();
  return nonadaptive_tester(povm, rho, problem.dim(), n);
}

}  // namespace qcp::sdp
