#include "qcp/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "qcp/errors.hpp"
#include "qcp/io.hpp"
#include "qcp/spectral.hpp"

namespace qcp {

namespace {

double min_eig(const ComplexMatrix& m) {
  if (m.size() == 1) return m(0, 0).real();
  return eig_hermitian(ComplexMatrix(0.5 * (m + m.adjoint()))).values(0);
}

std::vector<std::size_t> range_from(std::size_t first, std::size_t last) {
  std::vector<std::size_t> v;
  for (std::size_t f = first; f < last; ++f) v.push_back(f);
  return v;
}

}  // namespace

ConeReport comb_cone_check(const ComplexMatrix& x, std::size_t d, std::size_t steps) {
  const TensorShape full = TensorShape::uniform(2 * steps, d);
  if (x.rows() != static_cast<Eigen::Index>(full.total()) || x.cols() != x.rows()) {
    throw InputError(fmt::format("comb_cone_check: expected a {0}x{0} matrix", full.total()));
  }
  const auto di = static_cast<Eigen::Index>(d);
  ConeReport rep;
  rep.min_eigenvalue = min_eig(x);
  ComplexMatrix cur = x;
  for (std::size_t t = steps; t >= 1; --t) {
    const auto keep = range_from(1, 2 * t);
    const ComplexMatrix a = partial_trace(cur, TensorShape::uniform(2 * t, d), keep);
    const auto rest = range_from(1, 2 * t - 1);
    const ComplexMatrix next = partial_trace(a, TensorShape::uniform(2 * t - 1, d), rest) / static_cast<double>(d);
    ConeLevel lvl;
    lvl.level = t;
    lvl.residual = max_abs(ComplexMatrix(a - kron(ComplexMatrix::Identity(di, di), next)));
    lvl.min_eigenvalue = min_eig(next);
    rep.residual = std::max(rep.residual, lvl.residual);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, lvl.min_eigenvalue);
    rep.levels.push_back(lvl);
    cur = next;
  }
  rep.eta = cur(0, 0).real();
  return rep;
}

bool SegmentYReport::feasible(double tolerance) const {
  return cone.residual <= tolerance && cone.min_eigenvalue >= -tolerance && margin0 >= -tolerance &&
         margin1 >= -tolerance;
}

SegmentYReport check_segment_y(const ComplexMatrix& y, const ComplexMatrix& choi0, const ComplexMatrix& choi1,
                               std::size_t d, std::size_t steps) {
  if (y.rows() != choi0.rows() || y.cols() != choi0.cols()) {
    throw InputError(fmt::format("Y is {}x{}, the segment Choi matrices are {}x{}", y.rows(), y.cols(), choi0.rows(),
                                 choi0.cols()));
  }
  if (!is_hermitian(y, 1e-9)) throw InputError("Y is not Hermitian");
  SegmentYReport rep;
  rep.cone = comb_cone_check(y, d, steps);
  rep.margin0 = min_eig(ComplexMatrix(y - 0.5 * choi0));
  rep.margin1 = min_eig(ComplexMatrix(y - 0.5 * choi1));
  return rep;
}

ComplexMatrix assemble_certificate(const ChangePointProblem& problem, std::span<const ComplexMatrix> ys) {
  const std::size_t n = problem.n();
  if (ys.size() != n) throw InputError(fmt::format("expected {} segment Y matrices, got {}", n, ys.size()));
  ComplexMatrix x = ys[0];
  ComplexMatrix all0 = segment_choi(problem, 1, 0);  // E^{(n-1)}_{n-1}
  for (std::size_t k = 2; k <= n; ++k) {
    const ComplexMatrix u1 = segment_choi(problem, k, 1);
    const auto kd = static_cast<double>(k);
    x = (kd * kron(u1, x) + kron(ComplexMatrix(2.0 * ys[k - 1] - u1), all0)) / (kd + 1.0);
    all0 = kron(segment_choi(problem, k, 0), all0);
  }
  return x;
}

namespace {

Certificate finish(const ChangePointProblem& problem, std::span<const ComplexMatrix> ys, const CertificateOptions& options,
                   std::vector<SegmentYReport> reports) {
  Certificate c;
  c.n = problem.n();
  c.d = problem.dim();
  c.steps = problem.r();
  const auto analysis = analyze_segments(problem);
  for (const auto& s : analysis) c.gammas.push_back(s.gap.perfect ? 1.0 : s.gap.gamma);
  c.segment_reports = std::move(reports);
  for (const auto& r : c.segment_reports) c.segment_eta.push_back(r.cone.eta);

  c.x = assemble_certificate(problem, ys);
  c.cone = comb_cone_check(c.x, c.d, c.n * c.steps);
  c.eta = c.cone.eta;
  const double scale = 1.0 / static_cast<double>(c.n + 1);
  c.min_dominance = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m <= c.n; ++m) {
    const double v = min_eig(ComplexMatrix(c.x - scale * process_choi(problem, m)));
    c.dominance.push_back(v);
    c.min_dominance = std::min(c.min_dominance, v);
  }
  double sum = 1.0;
  for (double g : c.gammas) sum += g;
  c.q = sum * scale;
  c.q_discrepancy = std::abs(c.eta - c.q);
  c.verdict = c.cone.residual <= options.tolerance && c.cone.min_eigenvalue >= -options.tolerance &&
              c.min_dominance >= -options.tolerance;
  for (const auto& r : c.segment_reports) c.verdict = c.verdict && r.feasible(options.tolerance);
  return c;
}

void check_size(const ChangePointProblem& problem, const CertificateOptions& options) {
  problem.validate();
  double dim = 1.0;
  for (std::size_t i = 0; i < 2 * problem.n() * problem.r(); ++i) dim *= static_cast<double>(problem.dim());
  if (dim > static_cast<double>(options.max_dim)) {
    throw InputError(fmt::format("certificate dimension {} exceeds the limit {}", dim, options.max_dim));
  }
}

}  // namespace

Certificate build_certificate(const ChangePointProblem& problem, const CertificateOptions& options) {
  check_size(problem, options);
  std::vector<ComplexMatrix> ys;
  std::vector<SegmentYReport> reports;
  std::vector<std::pair<ComplexMatrix, ComplexMatrix>> seen;
  for (std::size_t k = 1; k <= problem.n(); ++k) {
    ComplexMatrix c0 = segment_choi(problem, k, 0);
    ComplexMatrix c1 = segment_choi(problem, k, 1);
    std::size_t hit = seen.size();
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (max_abs(ComplexMatrix(seen[i].first - c0)) < 1e-14 && max_abs(ComplexMatrix(seen[i].second - c1)) < 1e-14) {
        hit = i;
        break;
      }
    }
    if (hit < seen.size()) {
      ys.push_back(ys[hit]);
    } else {
      ys.push_back(sdp::solve_dy(c0, c1, problem.dim(), problem.r(), options.sdp).y);
    }
    reports.push_back(check_segment_y(ys.back(), c0, c1, problem.dim(), problem.r()));
    seen.emplace_back(std::move(c0), std::move(c1));
  }
  return finish(problem, ys, options, std::move(reports));
}

Certificate certificate_from_y(const ChangePointProblem& problem, std::span<const ComplexMatrix> ys,
                               const CertificateOptions& options) {
  check_size(problem, options);
  if (ys.size() != problem.n()) throw InputError(fmt::format("expected {} segment Y matrices, got {}", problem.n(), ys.size()));
  std::vector<SegmentYReport> reports;
  for (std::size_t k = 1; k <= problem.n(); ++k) {
    auto rep = check_segment_y(ys[k - 1], segment_choi(problem, k, 0), segment_choi(problem, k, 1), problem.dim(),
                               problem.r());
    if (options.strict && !rep.feasible(options.tolerance)) {
      throw InputError(fmt::format(
          "Y for segment {} is infeasible (cone residual {:.3e}, margins {:.3e} / {:.3e})", k, rep.cone.residual,
          rep.margin0, rep.margin1));
    }
    reports.push_back(rep);
  }
  return finish(problem, ys, options, std::move(reports));
}

Sandwich sandwich(const ChangePointProblem& problem, const Certificate& certificate, const sdp::Options& options) {
  Sandwich s;
  const std::size_t n = problem.n();
  s.tolerance = n > 3 ? static_cast<double>(n) * 2e-6 : 2e-6;
  s.formula = max_success_probability(certificate.gammas);
  bool perfect = false;
  for (double g : certificate.gammas) perfect = perfect || g >= 1.0;
  s.strategy = perfect ? build_composite_strategy(problem).success() : build_strategy(problem).success();
  s.upper = certificate.eta;

  bool identical = true;
  for (std::size_t k = 2; k <= n && identical; ++k) {
    for (std::size_t r = 0; r < problem.r(); ++r) {
      identical = identical && max_abs(ComplexMatrix(problem.segments[k - 1][r].u0 - problem.segments[0][r].u0)) < 1e-14 &&
                  max_abs(ComplexMatrix(problem.segments[k - 1][r].u1 - problem.segments[0][r].u1)) < 1e-14;
    }
  }
  if (identical) {
    const auto d = static_cast<Eigen::Index>(problem.dim());
    ComplexMatrix w0 = ComplexMatrix::Identity(d, d), w1 = w0;
    for (const auto& step : problem.segments[0]) {
      w0 = step.u0 * w0;
      w1 = step.u1 * w1;
    }
    sdp::Options opt = options;
    opt.max_total_dim = std::max(opt.max_total_dim, (n + 1) * (n + 1));
    s.lower = sdp::separable_baseline(gap_single(w0, w1), n, opt);
  } else {
    s.lower = std::numeric_limits<double>::quiet_NaN();
  }
  s.holds = certificate.verdict && std::abs(s.strategy - s.formula) <= s.tolerance &&
            s.strategy <= s.upper + s.tolerance && (std::isnan(s.lower) || s.lower <= s.strategy + s.tolerance);
  return s;
}

std::vector<ComplexMatrix> segment_ys_from_json(const nlohmann::json& j, std::size_t n) {
  std::vector<ComplexMatrix> ys;
  if (j.is_object() && j.contains("segments")) {
    for (const auto& key : j.items()) {
      if (key.key() != "segments") throw InputError(fmt::format("Y file: unknown key '{}'", key.key()));
    }
    const auto& arr = j.at("segments");
    if (!arr.is_array()) throw InputError("Y file: 'segments' must be an array");
    for (const auto& m : arr) ys.push_back(io::matrix_from_json(m));
    if (ys.size() != n) throw InputError(fmt::format("Y file: expected {} segments, got {}", n, ys.size()));
  } else {
    const ComplexMatrix y = io::matrix_from_json(j);
    ys.assign(n, y);
  }
  return ys;
}

nlohmann::json segment_ys_to_json(std::span<const ComplexMatrix> ys) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& y : ys) arr.push_back(io::matrix_to_json(y));
  return {{"segments", arr}};
}

nlohmann::json certificate_to_json(const Certificate& c) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : c.cone.levels) {
    levels.push_back({{"level", l.level}, {"residual", l.residual}, {"min_eigenvalue", l.min_eigenvalue}});
  }
  nlohmann::json segs = nlohmann::json::array();
  for (std::size_t k = 0; k < c.segment_reports.size(); ++k) {
    const auto& r = c.segment_reports[k];
    segs.push_back({{"segment", k + 1},
                    {"gamma", c.gammas[k]},
                    {"eta", r.cone.eta},
                    {"cone_residual", r.cone.residual},
                    {"margin0", r.margin0},
                    {"margin1", r.margin1}});
  }
  return {{"n", c.n},
          {"d", c.d},
          {"r", c.steps},
          {"eta", c.eta},
          {"q", c.q},
          {"q_discrepancy", c.q_discrepancy},
          {"cone_residual", c.cone.residual},
          {"cone_min_eigenvalue", c.cone.min_eigenvalue},
          {"levels", levels},
          {"dominance", c.dominance},
          {"min_dominance", c.min_dominance},
          {"segments", segs},
          {"verdict", c.verdict}};
}

}  // namespace qcp
