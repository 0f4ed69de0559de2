#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qcp/linalg.hpp"
#include "qcp/spectral.hpp"

namespace qcp {

struct StepPair {
  ComplexMatrix u0;
  ComplexMatrix u1;
};

/// segments[k-1][r-1] holds the pair (U_0^{(k,r)}, U_1^{(k,r)}). Every segment has
/// the same number of steps R and every unitary the same dimension d.
struct ChangePointProblem {
  std::vector<std::vector<StepPair>> segments;

  static ChangePointProblem repeated(const ComplexMatrix& u0, const ComplexMatrix& u1,
                                     std::size_t n, std::size_t r = 1);

  std::size_t n() const noexcept { return segments.size(); }
  std::size_t r() const noexcept { return segments.empty() ? 0 : segments.front().size(); }
  std::size_t dim() const;
  void validate() const;
  /// Sub-problem over segments first..last (1-based, inclusive).
  ChangePointProblem slice(std::size_t first, std::size_t last) const;
};

struct SegmentAnalysis {
  std::vector<SpectralGap> steps;
  SegmentGap gap;
};

std::vector<SegmentAnalysis> analyze_segments(const ChangePointProblem& problem);
std::vector<SegmentGap> segment_gaps(std::span<const SegmentAnalysis> segments);
std::vector<double> gammas_of(std::span<const SegmentGap> gaps);

/// p(m|n) as an (N+1)x(N+1) matrix, row = outcome m, column = change point n.
struct OutcomeModel {
  RealMatrix probs;

  std::size_t n() const noexcept { return static_cast<std::size_t>(probs.rows()) - 1; }
  /// Diagonal average under the uniform prior.
  double success() const;
};

double max_success_probability(std::span<const double> gammas);

/// Accepts gamma_k = 1 (zeta_k = 0); such segments make the model block diagonal.
OutcomeModel outcome_model(std::span<const double> gammas);

/// Analytic Gram matrix of the pre-measurement states. Throws NumericalError if it
/// fails the PSD check at 1e-9.
ComplexMatrix gram_matrix(std::span<const SegmentGap> gaps);

/// Amplitudes over b-strings, flat index sum_k b_k 2^{k-1}. Throws SplitRequired
/// when a segment is perfectly distinguishable.
std::vector<double> input_amplitudes(std::span<const SegmentGap> gaps);

enum class Completion { canonical, random };

struct AlignmentOptions {
  Completion completion = Completion::canonical;
  std::uint64_t seed = 0;
};

/// transport[k][r] = Q^{(k,r)} for r < R; post[k][r] is the unitary applied right
/// after step r: Q^{(k,r)} U_0^{(k,r)dagger} for r < R and U_0^{(k,R)dagger} for r = R.
struct AlignmentSet {
  std::vector<std::vector<ComplexMatrix>> transport;
  std::vector<std::vector<ComplexMatrix>> post;
};

AlignmentSet build_alignments(const ChangePointProblem& problem,
                              std::span<const SegmentAnalysis> segments,
                              const AlignmentOptions& options = {});

/// Aligned segment propagator: product over r of post[k][r] U_b^{(k,r)} (k is 1-based).
ComplexMatrix segment_propagator(const ChangePointProblem& problem, const AlignmentSet& alignments,
                                 std::size_t k, int b);

struct StrategyOptions {
  AlignmentOptions alignment;
  /// Full d^N simulation when d^N does not exceed this, effective 2^N space otherwise.
  std::size_t full_space_limit = 4096;
  bool force_effective = false;
};

struct Strategy {
  std::size_t n = 0;
  std::size_t dim = 0;
  bool effective_space = false;
  std::vector<SegmentAnalysis> segments;
  std::vector<SegmentGap> gaps;
  AlignmentSet alignments;
  ComplexVector input_state;
  ComplexMatrix outputs;      // column n is psi'_n
  ComplexMatrix measurement;  // column m is pi_m
  OutcomeModel model;         // analytic
  RealMatrix born;            // Born-rule probabilities, Pi_N = I - sum_{m<N} Pi_m

  double success() const;
};

/// Input state in the simulation space (full or effective).
ComplexVector build_input_state(std::span<const SegmentAnalysis> segments, bool effective_space);

/// Pre-measurement states psi'_n for n = 0..N as columns.
ComplexMatrix simulate_outputs(const ChangePointProblem& problem,
                               std::span<const SegmentAnalysis> segments,
                               const AlignmentSet& alignments, const ComplexVector& input_state,
                               bool effective_space);

/// Orthonormal pi_m (columns) with |<pi_m|psi'_n>|^2 = p(m|n). Throws NumericalError
/// when the outputs' Gram matrix deviates from the analytic one by more than 1e-8.
ComplexMatrix build_measurement(std::span<const SegmentGap> gaps, const ComplexMatrix& outputs);

/// Reference frame phi_n (columns) in C^{N+1}.
ComplexMatrix reference_frame(std::span<const SegmentGap> gaps);

RealMatrix born_probabilities(const ComplexMatrix& measurement, const ComplexMatrix& outputs);

Strategy build_strategy(const ChangePointProblem& problem, const StrategyOptions& options = {});

/// Strategy for problems with perfectly distinguishable segments: the change point
/// is first located among the blocks separated by those segments, then each block
/// is solved on its own.
struct CompositeStrategy {
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // inclusive change-point ranges
  std::vector<Strategy> parts;                              // empty strategy for 1-point blocks
  std::vector<double> gammas;
  OutcomeModel model;
  RealMatrix born;

  double success() const;
};

CompositeStrategy build_composite_strategy(const ChangePointProblem& problem,
                                           const StrategyOptions& options = {});

/// Choi matrix of segment k (1-based) under hypothesis b, on W_R V_R ... W_1 V_1.
ComplexMatrix segment_choi(const ChangePointProblem& problem, std::size_t k, int b);
/// Choi matrix of the whole process for change point n, segment N leftmost.
ComplexMatrix process_choi(const ChangePointProblem& problem, std::size_t n);

nlohmann::json strategy_to_json(const Strategy& strategy);
nlohmann::json model_to_json(const OutcomeModel& model);

}  // namespace qcp
