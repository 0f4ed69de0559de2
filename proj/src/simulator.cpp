#include "qcp/simulator.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qcp/errors.hpp"

namespace qcp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Substream::Substream(std::uint64_t seed, std::uint64_t trial)
    : key_(splitmix64(splitmix64(seed) ^ (trial * 0xD1B54A32D192ED03ULL + 0x8BB84B93962EACC9ULL))) {}

std::uint64_t Substream::next_u64() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }

double Substream::next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::string to_string(SamplingMode mode) { return mode == SamplingMode::analytic ? "analytic" : "born"; }

SamplingMode sampling_mode_from_string(const std::string& name) {
  if (name == "analytic") return SamplingMode::analytic;
  if (name == "born") return SamplingMode::born;
  throw InputError(fmt::format("unknown sampling mode '{}' (expected analytic or born)", name));
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw InputError("wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {successes == 0 ? 0.0 : std::max(0.0, center - half), successes == trials ? 1.0 : std::min(1.0, center + half)};
}

std::size_t sample_index(std::span<const double> probs, double u) {
  if (probs.empty()) throw InputError("sample_index: empty distribution");
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last = i;
    cum += probs[i];
    if (u < cum) return i;
  }
  return last;
}

namespace {

void check_stochastic(const RealMatrix& p, const char* what) {
  if (p.rows() == 0 || p.rows() != p.cols()) throw InputError(fmt::format("{}: probability matrix must be square", what));
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    if (p.col(c).minCoeff() < -1e-12 || std::abs(p.col(c).sum() - 1.0) > 1e-9) {
      throw InputError(fmt::format("{}: column {} is not a probability distribution", what, c));
    }
  }
}

std::vector<double> column(const RealMatrix& p, std::size_t n) {
  std::vector<double> v(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index m = 0; m < p.rows(); ++m) v[static_cast<std::size_t>(m)] = p(m, static_cast<Eigen::Index>(n));
  return v;
}

std::size_t draw_true(const ExperimentConfig& cfg, std::size_t lo, std::size_t hi, Substream& s) {
  if (cfg.true_change_point) return *cfg.true_change_point;
  const auto count = hi - lo + 1;
  return lo + std::min(count - 1, static_cast<std::size_t>(s.next_double() * static_cast<double>(count)));
}

void finish(EstimateRecord& e) {
  e.rate = static_cast<double>(e.successes) / static_cast<double>(e.trials);
  e.interval = wilson_interval(e.successes, e.trials);
}

}  // namespace

EstimateRecord run_experiment(const OutcomeModel& model, const ExperimentConfig& cfg, const RealMatrix* born) {
  if (cfg.trials == 0) throw InputError("run_experiment: trials must be at least 1");
  const RealMatrix* probs = &model.probs;
  if (cfg.mode == SamplingMode::born) {
    if (born == nullptr) throw InputError("run_experiment: born mode requires a strategy");
    probs = born;
  }
  check_stochastic(*probs, "run_experiment");
  const std::size_t n = static_cast<std::size_t>(probs->rows()) - 1;
  if (cfg.true_change_point && *cfg.true_change_point > n) {
    throw InputError(fmt::format("run_experiment: change point {} outside 0..{}", *cfg.true_change_point, n));
  }
  std::vector<std::vector<double>> cols;
  for (std::size_t c = 0; c <= n; ++c) cols.push_back(column(*probs, c));

  EstimateRecord e;
  e.trials = cfg.trials;
  if (cfg.keep_trials) e.records.reserve(cfg.trials);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Substream s(cfg.seed, t);
    const std::size_t truth = draw_true(cfg, 0, n, s);
    const std::size_t m = sample_index(cols[truth], s.next_double());
    const bool ok = m == truth;
    e.successes += ok ? 1 : 0;
    if (cfg.keep_trials) e.records.push_back({t, truth, m, ok});
  }
  finish(e);
  return e;
}

WindowResult postprocess_window(const OutcomeModel& model, std::size_t n0, std::size_t n1) {
  check_stochastic(model.probs, "postprocess_window");
  const std::size_t n = model.n();
  if (!(n0 < n1 && n1 <= n)) throw InputError(fmt::format("postprocess_window: need 0 <= n0 < n1 <= {}", n));
  const auto size = static_cast<Eigen::Index>(n1 - n0 + 1);
  WindowResult r;
  r.model.probs = RealMatrix::Zero(size, size);
  for (Eigen::Index c = 0; c < size; ++c) {
    const auto src_col = static_cast<Eigen::Index>(n0) + c;
    for (Eigen::Index m = 0; m < model.probs.rows(); ++m) {
      const auto clamped = std::clamp<Eigen::Index>(m, static_cast<Eigen::Index>(n0), static_cast<Eigen::Index>(n1));
      r.model.probs(clamped - static_cast<Eigen::Index>(n0), c) += model.probs(m, src_col);
    }
  }
  r.success = r.model.success();
  return r;
}

EstimateRecord run_window_experiment(const OutcomeModel& model, std::size_t n0, std::size_t n1,
                                     const ExperimentConfig& cfg) {
  check_stochastic(model.probs, "run_window_experiment");
  if (!(n0 < n1 && n1 <= model.n())) throw InputError("run_window_experiment: invalid window");
  if (cfg.trials == 0) throw InputError("run_window_experiment: trials must be at least 1");
  if (cfg.true_change_point && (*cfg.true_change_point < n0 || *cfg.true_change_point > n1)) {
    throw InputError("run_window_experiment: change point outside the window");
  }
  EstimateRecord e;
  e.trials = cfg.trials;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Substream s(cfg.seed, t);
    const std::size_t truth = draw_true(cfg, n0, n1, s);
    const auto col = column(model.probs, truth);
    const std::size_t m = std::clamp(sample_index(col, s.next_double()), n0, n1);
    const bool ok = m == truth;
    e.successes += ok ? 1 : 0;
    if (cfg.keep_trials) e.records.push_back({t, truth, m, ok});
  }
  finish(e);
  return e;
}

MleEstimate mle_estimate(std::span<const long long> outcomes) {
  if (outcomes.empty()) throw InputError("mle_estimate: no outcomes");
  std::vector<long long> v(outcomes.begin(), outcomes.end());
  std::sort(v.begin(), v.end());
  const std::size_t l = v.size();
  MleEstimate e;
  if (l % 2 == 1) {
    e.lower = e.upper = v[l / 2];
  } else {
    e.lower = v[l / 2 - 1];
    e.upper = v[l / 2];
  }
  e.canonical = e.lower;
  return e;
}

long long sample_discrete_laplace(double zeta, Substream& stream) {
  if (!(zeta >= 0.0 && zeta < 1.0)) throw InputError("sample_discrete_laplace: zeta must lie in [0, 1)");
  const double p0 = (1.0 - zeta) / (1.0 + zeta);
  const double u = stream.next_double();
  if (u < p0 || zeta == 0.0) return 0;
  const bool negative = u < p0 + 0.5 * (1.0 - p0);
  // |k| - 1 is geometric with ratio zeta
  const double v = 1.0 - stream.next_double();
  const long long mag = 1 + static_cast<long long>(std::floor(std::log(v) / std::log(zeta)));
  return negative ? -mag : mag;
}

MleResult mle_experiment(const OutcomeModel& model, std::size_t l, const ExperimentConfig& cfg, MleSampler sampler) {
  check_stochastic(model.probs, "mle_experiment");
  if (l == 0) throw InputError("mle_experiment: L must be at least 1");
  if (cfg.trials == 0) throw InputError("mle_experiment: trials must be at least 1");
  const std::size_t n = model.n();
  if (n == 0) throw InputError("mle_experiment: need at least one segment");
  MleResult r;
  r.gamma = 2.0 * model.probs(0, 0) - 1.0;
  const OutcomeModel uniform = outcome_model(std::vector<double>(n, r.gamma));
  if (max_abs(RealMatrix(uniform.probs - model.probs)) > 1e-9) {
    throw InputError("mle_experiment: the outcome model does not have a uniform gamma");
  }
  if (sampler == MleSampler::laplace && r.gamma <= 0.0) {
    throw InputError("mle_experiment: the Laplace sampler needs gamma > 0");
  }
  if (cfg.true_change_point && *cfg.true_change_point > n) throw InputError("mle_experiment: change point out of range");
  const double zeta = zeta_of(r.gamma);
  std::vector<std::vector<double>> cols;
  for (std::size_t c = 0; c <= n; ++c) cols.push_back(column(model.probs, c));

  std::vector<long long> outcomes(l);
  r.runs = cfg.trials;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Substream s(cfg.seed, t);
    const std::size_t truth = draw_true(cfg, 0, n, s);
    for (std::size_t i = 0; i < l; ++i) {
      if (sampler == MleSampler::truncated) {
        outcomes[i] = static_cast<long long>(sample_index(cols[truth], s.next_double()));
      } else {
        outcomes[i] = static_cast<long long>(truth) + sample_discrete_laplace(zeta, s);
      }
    }
    if (mle_estimate(outcomes).canonical == static_cast<long long>(truth)) ++r.hits;
  }
  r.rate = static_cast<double>(r.hits) / static_cast<double>(r.runs);
  r.interval = wilson_interval(r.hits, r.runs);
  return r;
}

nlohmann::json estimate_to_json(const EstimateRecord& e) {
  return {{"trials", e.trials},
          {"successes", e.successes},
          {"rate", e.rate},
          {"interval", {e.interval.lower, e.interval.upper}}};
}

}  // namespace qcp
