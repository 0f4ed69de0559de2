#include "qcp/strategy.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "qcp/errors.hpp"
#include "qcp/io.hpp"

namespace qcp {

namespace {

constexpr double kGramMatch = 1e-8;
constexpr double kGramPsd = 1e-9;
constexpr double kConfinement = 1e-8;
constexpr double kWhitenRank = 1e-10;

bool bit(std::size_t b, std::size_t k) { return ((b >> (k - 1)) & 1U) != 0; }

ComplexMatrix eigen_frame(const SpectralGap& g, bool twisted, std::uint64_t seed) {
  const auto d = g.vec0.size();
  ComplexMatrix pair(d, 2);
  pair.col(0) = g.vec0;
  pair.col(1) = g.vec1;
  ComplexMatrix frame = complete_orthonormal(pair);
  if (twisted && d > 2) {
    frame.rightCols(d - 2) = frame.rightCols(d - 2) * random_unitary(static_cast<std::size_t>(d - 2), seed);
  }
  return frame;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t k, std::uint64_t r) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (k * 1315423911ULL + r + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

ChangePointProblem ChangePointProblem::repeated(const ComplexMatrix& u0, const ComplexMatrix& u1,
                                                std::size_t n, std::size_t r) {
  if (n == 0 || r == 0) throw InputError("change-point problem needs N >= 1 and R >= 1");
  ChangePointProblem p;
  p.segments.assign(n, std::vector<StepPair>(r, StepPair{u0, u1}));
  p.validate();
  return p;
}

std::size_t ChangePointProblem::dim() const {
  if (segments.empty() || segments.front().empty()) return 0;
  return static_cast<std::size_t>(segments.front().front().u0.rows());
}

void ChangePointProblem::validate() const {
  if (segments.empty()) throw InputError("change-point problem has no segments");
  const std::size_t steps = r();
  const auto d = static_cast<Eigen::Index>(dim());
  if (steps == 0) throw InputError("segment 1 has no steps");
  if (d < 2) throw InputError("channel dimension must be at least 2");
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (segments[k].size() != steps) {
      throw InputError(fmt::format("segment {} has {} steps, expected {}", k + 1,
                                   segments[k].size(), steps));
    }
    for (std::size_t s = 0; s < steps; ++s) {
      const auto& p = segments[k][s];
      for (const ComplexMatrix* u : {&p.u0, &p.u1}) {
        if (u->rows() != d || u->cols() != d) {
          throw InputError(fmt::format("step ({},{}) has dimension {}x{}, expected {}", k + 1,
                                       s + 1, u->rows(), u->cols(), d));
        }
        if (!is_unitary(*u)) {
          throw InputError(fmt::format("step ({},{}) is not unitary", k + 1, s + 1));
        }
      }
    }
  }
}

ChangePointProblem ChangePointProblem::slice(std::size_t first, std::size_t last) const {
  if (first < 1 || last > n() || first > last) throw InputError("invalid segment slice");
  ChangePointProblem p;
  p.segments.assign(segments.begin() + static_cast<std::ptrdiff_t>(first - 1),
                    segments.begin() + static_cast<std::ptrdiff_t>(last));
  return p;
}

std::vector<SegmentAnalysis> analyze_segments(const ChangePointProblem& problem) {
  problem.validate();
  std::vector<SegmentAnalysis> out(problem.n());
  for (std::size_t k = 0; k < problem.n(); ++k) {
    for (const auto& step : problem.segments[k]) out[k].steps.push_back(gap_single(step.u0, step.u1));
    out[k].gap = segment_gap(out[k].steps);
  }
  return out;
}

std::vector<SegmentGap> segment_gaps(std::span<const SegmentAnalysis> segments) {
  std::vector<SegmentGap> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(s.gap);
  return out;
}

std::vector<double> gammas_of(std::span<const SegmentGap> gaps) {
  std::vector<double> out;
  out.reserve(gaps.size());
  for (const auto& g : gaps) out.push_back(g.gamma);
  return out;
}

double OutcomeModel::success() const { return probs.diagonal().mean(); }

double max_success_probability(std::span<const double> gammas) {
  if (gammas.empty()) throw InputError("max_success_probability: empty gamma list");
  double sum = 0.0;
  for (double g : gammas) {
    if (!(g >= 0.0 && g <= 1.0)) throw InputError(fmt::format("gamma {} outside [0, 1]", g));
    sum += g;
  }
  return (sum + 1.0) / static_cast<double>(gammas.size() + 1);
}

OutcomeModel outcome_model(std::span<const double> gammas) {
  const std::size_t n = gammas.size();
  if (n == 0) throw InputError("outcome_model: empty gamma list");
  std::vector<double> g(n + 2, 1.0);
  std::vector<double> zeta(n + 2, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    if (!(gammas[k - 1] >= 0.0 && gammas[k - 1] <= 1.0)) {
      throw InputError(fmt::format("gamma_{} = {} outside [0, 1]", k, gammas[k - 1]));
    }
    g[k] = gammas[k - 1];
    zeta[k] = zeta_of(g[k]);
  }
  OutcomeModel model;
  const auto size = static_cast<Eigen::Index>(n + 1);
  model.probs = RealMatrix::Zero(size, size);
  for (std::size_t m = 0; m <= n; ++m) {
    for (std::size_t c = 0; c <= n; ++c) {
      double p = (g[m] + g[m + 1]) / 2.0;
      for (std::size_t l = std::min(m, c) + 1; l <= std::max(m, c); ++l) p *= zeta[l];
      model.probs(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c)) = p;
    }
  }
  return model;
}

ComplexMatrix gram_matrix(std::span<const SegmentGap> gaps) {
  const std::size_t n = gaps.size();
  const auto size = static_cast<Eigen::Index>(n + 1);
  ComplexMatrix g = ComplexMatrix::Identity(size, size);
  for (std::size_t row = 1; row <= n; ++row) {
    for (std::size_t col = 0; col < row; ++col) {
      double sum = 1.0;
      Complex prod{1.0, 0.0};
      for (std::size_t l = col + 1; l <= row; ++l) {
        sum += gaps[l - 1].gamma;
        prod *= std::sqrt(gaps[l - 1].zeta) * gaps[l - 1].omega;
      }
      g(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = sum * prod;
      g(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(row)) = std::conj(sum * prod);
    }
  }
  const auto psd = psd_check(g, kGramPsd);
  if (!psd.is_psd) {
    throw NumericalError(fmt::format("Gram matrix is not PSD (min eigenvalue {:.3e})", psd.min_eigenvalue),
                         psd.min_eigenvalue);
  }
  return g;
}

std::vector<double> input_amplitudes(std::span<const SegmentGap> gaps) {
  const std::size_t n = gaps.size();
  if (n == 0) throw InputError("input_amplitudes: no segments");
  if (n > 24) throw InputError("input_amplitudes: too many segments");
  for (std::size_t k = 1; k <= n; ++k) {
    if (gaps[k - 1].perfect || gaps[k - 1].gamma >= 1.0) {
      throw SplitRequired(fmt::format("segment {} is perfectly distinguishable; split the problem", k), k);
    }
  }
  std::vector<double> nu(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double s = std::sqrt(gaps[k - 1].zeta * gaps[k].zeta);
    nu[k] = (1.0 - s) / (1.0 + s);
  }
  const std::size_t count = std::size_t{1} << n;
  std::vector<double> amp(count);
  for (std::size_t b = 0; b < count; ++b) {
    double a = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 1; k < n; ++k) {
      const bool flip = bit(b, k) != bit(b, k + 1);
      a *= std::sqrt((flip ? nu[k] : 1.0) / (nu[k] + 1.0));
    }
    amp[b] = a;
  }
  return amp;
}

AlignmentSet build_alignments(const ChangePointProblem& problem,
                              std::span<const SegmentAnalysis> segments,
                              const AlignmentOptions& options) {
  problem.validate();
  if (segments.size() != problem.n()) throw InputError("build_alignments: segment count mismatch");
  const std::size_t steps = problem.r();
  AlignmentSet out;
  out.transport.resize(problem.n());
  out.post.resize(problem.n());
  for (std::size_t k = 0; k < problem.n(); ++k) {
    if (segments[k].steps.size() != steps) throw InputError("build_alignments: step count mismatch");
    for (std::size_t r = 0; r + 1 < steps; ++r) {
      const ComplexMatrix from = eigen_frame(segments[k].steps[r], false, 0);
      const ComplexMatrix to = eigen_frame(segments[k].steps[r + 1],
                                           options.completion == Completion::random,
                                           mix(options.seed, k, r));
      const ComplexMatrix q = to * from.adjoint();
      out.transport[k].push_back(q);
      out.post[k].push_back(q * problem.segments[k][r].u0.adjoint());
    }
    out.post[k].push_back(problem.segments[k][steps - 1].u0.adjoint());
  }
  return out;
}

ComplexMatrix segment_propagator(const ChangePointProblem& problem, const AlignmentSet& alignments,
                                 std::size_t k, int b) {
  if (k < 1 || k > problem.n()) throw InputError("segment_propagator: segment index out of range");
  const auto& seg = problem.segments[k - 1];
  const auto d = static_cast<Eigen::Index>(problem.dim());
  ComplexMatrix p = ComplexMatrix::Identity(d, d);
  for (std::size_t r = 0; r < seg.size(); ++r) {
    p = alignments.post[k - 1][r] * (b == 0 ? seg[r].u0 : seg[r].u1) * p;
  }
  return p;
}

ComplexVector build_input_state(std::span<const SegmentAnalysis> segments, bool effective_space) {
  const auto gaps = segment_gaps(segments);
  const auto amp = input_amplitudes(gaps);
  const std::size_t n = segments.size();
  if (effective_space) {
    ComplexVector v(static_cast<Eigen::Index>(amp.size()));
    for (std::size_t b = 0; b < amp.size(); ++b) v(static_cast<Eigen::Index>(b)) = amp[b];
    return v;
  }
  const auto d = segments.front().steps.front().vec0.size();
  Eigen::Index total = 1;
  for (std::size_t k = 0; k < n; ++k) total *= d;
  ComplexVector psi = ComplexVector::Zero(total);
  for (std::size_t b = 0; b < amp.size(); ++b) {
    ComplexVector term = ComplexVector::Constant(1, Complex{amp[b], 0.0});
    for (std::size_t k = n; k >= 1; --k) {
      const auto& first = segments[k - 1].steps.front();
      term = kron(term, bit(b, k) ? first.vec1 : first.vec0);
    }
    psi += term;
  }
  return psi;
}

ComplexMatrix simulate_outputs(const ChangePointProblem& problem,
                               std::span<const SegmentAnalysis> segments,
                               const AlignmentSet& alignments, const ComplexVector& input_state,
                               bool effective_space) {
  const std::size_t n = problem.n();
  const std::size_t d = problem.dim();
  std::vector<std::array<ComplexMatrix, 2>> maps(n);
  for (std::size_t k = 1; k <= n; ++k) {
    for (int b = 0; b < 2; ++b) {
      ComplexMatrix prop = segment_propagator(problem, alignments, k, b);
      if (effective_space) {
        const auto& first = segments[k - 1].steps.front();
        const auto& last = segments[k - 1].steps.back();
        ComplexMatrix in(static_cast<Eigen::Index>(d), 2);
        ComplexMatrix out(static_cast<Eigen::Index>(d), 2);
        in << first.vec0, first.vec1;
        out << last.vec0, last.vec1;
        const ComplexMatrix image = prop * in;
        const ComplexMatrix reduced = out.adjoint() * image;
        const double leak = max_abs(ComplexMatrix(image - out * reduced));
        if (leak > kConfinement) {
          throw NumericalError(fmt::format("segment {} leaves its eigenvector span (residual {:.3e})", k, leak),
                               leak);
        }
        prop = reduced;
      }
      maps[k - 1][static_cast<std::size_t>(b)] = std::move(prop);
    }
  }
  const TensorShape shape = TensorShape::uniform(n, effective_space ? 2 : d);
  ComplexMatrix outputs(input_state.size(), static_cast<Eigen::Index>(n + 1));
  for (std::size_t c = 0; c <= n; ++c) {
    ComplexVector v = input_state;
    for (std::size_t k = 1; k <= n; ++k) {
      v = apply_factor(v, shape, n - k, maps[k - 1][c < k ? 1 : 0]);
    }
    outputs.col(static_cast<Eigen::Index>(c)) = v;
  }
  return outputs;
}

ComplexMatrix reference_frame(std::span<const SegmentGap> gaps) {
  const std::size_t n = gaps.size();
  const auto model = outcome_model(gammas_of(gaps));
  std::vector<Complex> phase(n + 1, Complex{1.0, 0.0});
  for (std::size_t l = 1; l <= n; ++l) phase[l] = phase[l - 1] * gaps[l - 1].omega;
  const auto size = static_cast<Eigen::Index>(n + 1);
  ComplexMatrix phi(size, size);
  for (Eigen::Index c = 0; c < size; ++c) {
    for (Eigen::Index k = 0; k < size; ++k) {
      phi(k, c) = std::sqrt(model.probs(k, c)) * phase[static_cast<std::size_t>(k)] *
                  std::conj(phase[static_cast<std::size_t>(c)]);
    }
  }
  return phi;
}

ComplexMatrix build_measurement(std::span<const SegmentGap> gaps, const ComplexMatrix& outputs) {
  const auto size = static_cast<Eigen::Index>(gaps.size() + 1);
  if (outputs.cols() != size) throw InputError("build_measurement: expected N+1 output states");
  const ComplexMatrix g = gram_matrix(gaps);
  const double out_residual = max_abs(ComplexMatrix(gram_of(outputs) - g));
  if (out_residual > kGramMatch) {
    throw NumericalError(fmt::format("output Gram matrix differs from the analytic one by {:.3e}", out_residual),
                         out_residual);
  }
  const ComplexMatrix phi = reference_frame(gaps);
  const double ref_residual = max_abs(ComplexMatrix(gram_of(phi) - g));
  if (ref_residual > kGramMatch) {
    throw NumericalError(fmt::format("reference frame Gram matrix differs by {:.3e}", ref_residual),
                         ref_residual);
  }

  const auto eig = eig_hermitian(g);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) > kWhitenRank) kept.push_back(i);
  }
  const auto rank = static_cast<Eigen::Index>(kept.size());
  ComplexMatrix whiten(size, rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    whiten.col(j) = eig.vectors.col(kept[static_cast<std::size_t>(j)]) /
                    std::sqrt(eig.values(kept[static_cast<std::size_t>(j)]));
  }
  const ComplexMatrix q_psi = orthonormalize(outputs * whiten);
  const ComplexMatrix q_phi = orthonormalize(phi * whiten);
  ComplexMatrix upsilon = q_psi * q_phi.adjoint();
  if (rank < size) {
    const ComplexMatrix c_phi = orthonormal_complement(q_phi, size - rank);
    const ComplexMatrix c_psi = orthonormal_complement(q_psi, size - rank);
    upsilon += c_psi * c_phi.adjoint();
  }
  return upsilon;
}

RealMatrix born_probabilities(const ComplexMatrix& measurement, const ComplexMatrix& outputs) {
  const Eigen::Index size = outputs.cols();
  const ComplexMatrix amps = measurement.adjoint() * outputs;
  RealMatrix p(size, size);
  for (Eigen::Index c = 0; c < size; ++c) {
    double rest = outputs.col(c).squaredNorm();
    for (Eigen::Index m = 0; m + 1 < size; ++m) {
      p(m, c) = std::norm(amps(m, c));
      rest -= p(m, c);
    }
    p(size - 1, c) = rest;
  }
  return p;
}

double Strategy::success() const { return born.diagonal().mean(); }

Strategy build_strategy(const ChangePointProblem& problem, const StrategyOptions& options) {
  Strategy s;
  s.segments = analyze_segments(problem);
  s.gaps = segment_gaps(s.segments);
  s.n = problem.n();
  s.dim = problem.dim();
  // throws SplitRequired before any heavy work
  (void)input_amplitudes(s.gaps);

  double full = 1.0;
  for (std::size_t k = 0; k < s.n; ++k) full *= static_cast<double>(s.dim);
  s.effective_space = options.force_effective || full > static_cast<double>(options.full_space_limit);

  s.alignments = build_alignments(problem, s.segments, options.alignment);
  s.input_state = build_input_state(s.segments, s.effective_space);
  s.outputs = simulate_outputs(problem, s.segments, s.alignments, s.input_state, s.effective_space);
  s.measurement = build_measurement(s.gaps, s.outputs);
  s.model = outcome_model(gammas_of(s.gaps));
  s.born = born_probabilities(s.measurement, s.outputs);
  return s;
}

double CompositeStrategy::success() const { return born.diagonal().mean(); }

CompositeStrategy build_composite_strategy(const ChangePointProblem& problem,
                                           const StrategyOptions& options) {
  const auto segments = analyze_segments(problem);
  CompositeStrategy cs;
  const std::size_t n = problem.n();
  for (const auto& s : segments) cs.gammas.push_back(s.gap.perfect ? 1.0 : s.gap.gamma);
  cs.model = outcome_model(cs.gammas);
  const auto size = static_cast<Eigen::Index>(n + 1);
  cs.born = RealMatrix::Zero(size, size);

  std::size_t start = 0;
  for (std::size_t k = 1; k <= n + 1; ++k) {
    if (k <= n && !segments[k - 1].gap.perfect) continue;
    // block of change points start..k-1 uses segments start+1..k-1
    const std::size_t stop = k - 1;
    cs.blocks.emplace_back(start, stop);
    const auto a = static_cast<Eigen::Index>(start);
    if (stop == start) {
      cs.parts.emplace_back();
      cs.born(a, a) = 1.0;
    } else {
      Strategy part = build_strategy(problem.slice(start + 1, stop), options);
      const auto len = static_cast<Eigen::Index>(stop - start + 1);
      cs.born.block(a, a, len, len) = part.born;
      cs.parts.push_back(std::move(part));
    }
    start = k;
  }
  return cs;
}

nlohmann::json model_to_json(const OutcomeModel& model) {
  return {{"N", model.n()}, {"probs", io::real_matrix_to_json(model.probs)},
          {"success", model.success()}};
}

ComplexMatrix segment_choi(const ChangePointProblem& problem, std::size_t k, int b) {
  if (k < 1 || k > problem.n()) throw InputError("segment_choi: segment index out of range");
  const auto& seg = problem.segments[k - 1];
  ComplexMatrix c = ComplexMatrix::Ones(1, 1);
  for (std::size_t r = seg.size(); r >= 1; --r) {
    c = kron(c, choi_of_unitary(b == 0 ? seg[r - 1].u0 : seg[r - 1].u1));
  }
  return c;
}

ComplexMatrix process_choi(const ChangePointProblem& problem, std::size_t n) {
  if (n > problem.n()) throw InputError("process_choi: change point out of range");
  ComplexMatrix c = ComplexMatrix::Ones(1, 1);
  for (std::size_t k = problem.n(); k >= 1; --k) c = kron(c, segment_choi(problem, k, n < k ? 1 : 0));
  return c;
}

nlohmann::json strategy_to_json(const Strategy& s) {
  nlohmann::json gaps = nlohmann::json::array();
  for (const auto& g : s.gaps) {
    gaps.push_back({{"gamma", g.gamma},
                    {"zeta", g.zeta},
                    {"lambda0", {g.lambda0.real(), g.lambda0.imag()}},
                    {"lambda1", {g.lambda1.real(), g.lambda1.imag()}},
                    {"omega", {g.omega.real(), g.omega.imag()}}});
  }
  nlohmann::json meas = nlohmann::json::array();
  for (Eigen::Index m = 0; m < s.measurement.cols(); ++m) {
    meas.push_back(io::vector_to_json(s.measurement.col(m)));
  }
  return {{"N", s.n},
          {"dim", s.dim},
          {"space", s.effective_space ? "effective" : "full"},
          {"segments", std::move(gaps)},
          {"input_state", io::vector_to_json(s.input_state)},
          {"measurement", std::move(meas)},
          {"outcome_model", model_to_json(s.model)},
          {"born", io::real_matrix_to_json(s.born)},
          {"success", s.success()}};
}

}  // namespace qcp
