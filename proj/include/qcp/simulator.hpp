#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcp/linalg.hpp"
#include "qcp/strategy.hpp"

namespace qcp {

/// Counter-based stream: draw i of substream (seed, trial) depends only on (seed, trial, i).
class Substream {
 public:
  Substream(std::uint64_t seed, std::uint64_t trial);
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double next_double();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

enum class SamplingMode { analytic, born };
std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

struct ExperimentConfig {
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::analytic;
  std::optional<std::size_t> true_change_point;  // uniform over 0..N when empty
  bool keep_trials = true;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::size_t true_n = 0;
  std::size_t outcome = 0;
  bool correct = false;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

inline constexpr double kWilsonZ95 = 1.959963984540054;

Interval wilson_interval(std::size_t successes, std::size_t trials, double z = kWilsonZ95);

struct EstimateRecord {
  std::vector<TrialRecord> records;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double rate = 0.0;
  Interval interval;
};

/// Inverse-CDF draw from a probability column.
std::size_t sample_index(std::span<const double> probs, double u);

/// Born mode samples from `born` (required); analytic mode from the model.
EstimateRecord run_experiment(const OutcomeModel& model, const ExperimentConfig& cfg,
                              const RealMatrix* born = nullptr);

/// Outcomes outside [n0, n1] are clamped onto the window; only n in [n0, n1] remain.
struct WindowResult {
  OutcomeModel model;  // indexed relative to n0
  double success = 0.0;
};
WindowResult postprocess_window(const OutcomeModel& model, std::size_t n0, std::size_t n1);

/// Monte-Carlo estimate of the clamped estimator with n uniform on the window.
EstimateRecord run_window_experiment(const OutcomeModel& model, std::size_t n0, std::size_t n1,
                                     const ExperimentConfig& cfg);

struct MleEstimate {
  long long lower = 0;
  long long upper = 0;
  long long canonical = 0;  // lower median
};
MleEstimate mle_estimate(std::span<const long long> outcomes);

enum class MleSampler { truncated, laplace };

struct MleResult {
  std::size_t runs = 0;
  std::size_t hits = 0;
  double rate = 0.0;
  Interval interval;
  double gamma = 0.0;
};

/// Repeats each run L times on the same change point and scores the median estimate.
/// Requires a uniform-gamma model.
MleResult mle_experiment(const OutcomeModel& model, std::size_t l, const ExperimentConfig& cfg,
                         MleSampler sampler = MleSampler::truncated);

/// Discrete Laplace offset with P(k) = (1 - zeta)/(1 + zeta) zeta^|k|.
long long sample_discrete_laplace(double zeta, Substream& stream);

nlohmann::json estimate_to_json(const EstimateRecord& e);

}  // namespace qcp
