#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "qcp/errors.hpp"
#include "qcp/simulator.hpp"

using namespace qcp;

namespace {

std::vector<double> uniform(double g, std::size_t n) { return std::vector<double>(n, g); }

bool inside(double x, const Interval& i) { return i.lower <= x && x <= i.upper; }

// every n minimizing sum |m_l - n| over the outcome range
std::pair<long long, long long> brute_argmin(const std::vector<long long>& m) {
  const long long lo = *std::min_element(m.begin(), m.end()) - 2;
  const long long hi = *std::max_element(m.begin(), m.end()) + 2;
  long long best = std::numeric_limits<long long>::max(), first = 0, last = 0;
  for (long long n = lo; n <= hi; ++n) {
    long long s = 0;
    for (long long x : m) s += std::llabs(x - n);
    if (s < best) {
      best = s;
      first = last = n;
    } else if (s == best) {
      last = n;
    }
  }
  return {first, last};
}

// chi-square goodness of fit, pooling cells with small expectation
double chi_square_p(const std::vector<double>& expected_probs, const std::vector<std::size_t>& counts, std::size_t total) {
  double stat = 0.0, pool_e = 0.0, pool_o = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = expected_probs[i] * static_cast<double>(total);
    if (e < 20.0) {
      pool_e += e;
      pool_o += static_cast<double>(counts[i]);
      continue;
    }
    stat += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
    ++cells;
  }
  if (pool_e > 0.0) {
    stat += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
    ++cells;
  }
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST(Substream, OrderIndependent) {
  Substream a(42, 7), b(42, 7), c(42, 8);
  const auto a1 = a.next_u64();
  EXPECT_EQ(a1, b.next_u64());
  EXPECT_NE(a1, c.next_u64());
  for (int i = 0; i < 100; ++i) {
    const double u = a.next_double();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Wilson, ContainsPointEstimate) {
  for (std::size_t s : {0u, 1u, 37u, 100u}) {
    const auto i = wilson_interval(s, 100);
    EXPECT_TRUE(inside(static_cast<double>(s) / 100.0, i));
    EXPECT_GE(i.lower, 0.0);
    EXPECT_LE(i.upper, 1.0);
  }
  EXPECT_THROW(wilson_interval(0, 0), InputError);
}

TEST(RunExperiment, DegenerateModelAlwaysSucceeds) {
  OutcomeModel m{RealMatrix::Identity(4, 4)};
  ExperimentConfig cfg;
  cfg.trials = 500;
  const auto e = run_experiment(m, cfg);
  EXPECT_EQ(e.successes, 500u);
  EXPECT_DOUBLE_EQ(e.rate, 1.0);
}

TEST(RunExperiment, UniformGammaMatchesFormula) {
  const auto m = outcome_model(uniform(0.5, 4));
  ExperimentConfig cfg;
  cfg.trials = 1000000;
  cfg.seed = 2024;
  cfg.keep_trials = false;
  const auto e = run_experiment(m, cfg);
  EXPECT_TRUE(inside(0.6, e.interval)) << e.rate;
}

TEST(RunExperiment, DeterministicGivenSeed) {
  const auto m = outcome_model(std::vector<double>{0.2, 0.5, 0.7});
  ExperimentConfig cfg;
  cfg.trials = 2000;
  cfg.seed = 5;
  const auto a = run_experiment(m, cfg), b = run_experiment(m, cfg);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].true_n, b.records[i].true_n);
    EXPECT_EQ(a.records[i].outcome, b.records[i].outcome);
  }
  EXPECT_EQ(a.successes, b.successes);
}

TEST(RunExperiment, BornModeAgreesWithAnalytic) {
  const ComplexMatrix u0 = random_unitary(2, 4);
  const auto s = build_strategy(ChangePointProblem::repeated(u0, u0 * random_unitary(2, 5), 3));
  ExperimentConfig cfg;
  cfg.trials = 100000;
  cfg.seed = 11;
  cfg.keep_trials = false;
  const auto a = run_experiment(s.model, cfg);
  cfg.mode = SamplingMode::born;
  cfg.seed = 12;
  const auto b = run_experiment(s.model, cfg, &s.born);
  EXPECT_TRUE(a.interval.lower <= b.interval.upper && b.interval.lower <= a.interval.upper);
  EXPECT_THROW(run_experiment(s.model, cfg), InputError);
}

TEST(RunExperiment, RejectsBadConfig) {
  const auto m = outcome_model(uniform(0.5, 2));
  ExperimentConfig cfg;
  cfg.trials = 0;
  EXPECT_THROW(run_experiment(m, cfg), InputError);
  cfg.trials = 10;
  cfg.true_change_point = 5;
  EXPECT_THROW(run_experiment(m, cfg), InputError);
  OutcomeModel bad{RealMatrix::Constant(2, 2, 0.3)};
  cfg.true_change_point.reset();
  EXPECT_THROW(run_experiment(bad, cfg), InputError);
}

TEST(RunExperiment, InteriorHistogramFitsModel) {
  const auto m = outcome_model(uniform(0.5, 20));
  ExperimentConfig cfg;
  cfg.trials = 1000000;
  cfg.seed = 99;
  cfg.true_change_point = 10;
  const auto e = run_experiment(m, cfg);
  std::vector<std::size_t> counts(21, 0);
  for (const auto& r : e.records) ++counts[r.outcome];
  std::vector<double> probs(21);
  for (Eigen::Index i = 0; i <= 20; ++i) probs[static_cast<std::size_t>(i)] = m.probs(i, 10);
  EXPECT_GT(chi_square_p(probs, counts, cfg.trials), 1e-3);
}

TEST(Window, FullWindowIsUnchanged) {
  const auto m = outcome_model(std::vector<double>{0.3, 0.6, 0.1});
  const auto w = postprocess_window(m, 0, 3);
  EXPECT_LE(max_abs(RealMatrix(w.model.probs - m.probs)), 1e-15);
  EXPECT_NEAR(w.success, m.success(), 1e-15);
}

TEST(Window, ClampedModelHasUnitBoundaryGammas) {
  const std::vector<double> g{0.3, 0.6, 0.1, 0.45, 0.8};
  const auto m = outcome_model(g);
  const auto w = postprocess_window(m, 1, 4);
  const std::vector<double> inner{0.6, 0.1, 0.45};
  EXPECT_LE(max_abs(RealMatrix(w.model.probs - outcome_model(inner).probs)), 1e-12);
  EXPECT_NEAR(w.success, (0.6 + 0.1 + 0.45 + 1) / 4, 1e-12);
  for (Eigen::Index c = 0; c < 4; ++c) {
    double tail = 0.0;
    for (Eigen::Index k = 0; k <= 1; ++k) tail += m.probs(k, c + 1);
    EXPECT_NEAR(w.model.probs(0, c), tail, 1e-12);
  }
}

TEST(Window, UniformGammaInnerWindow) {
  const auto w = postprocess_window(outcome_model(uniform(0.5, 4)), 1, 3);
  EXPECT_NEAR(w.success, 2.0 / 3.0, 1e-12);
  EXPECT_THROW(postprocess_window(outcome_model(uniform(0.5, 4)), 3, 3), InputError);
  EXPECT_THROW(postprocess_window(outcome_model(uniform(0.5, 4)), 2, 5), InputError);
}

TEST(Window, MonteCarloMatchesClosedForm) {
  const std::vector<double> g{0.3, 0.6, 0.1, 0.45, 0.8};
  const auto m = outcome_model(g);
  ExperimentConfig cfg;
  cfg.trials = 100000;
  cfg.seed = 3;
  cfg.keep_trials = false;
  const auto e = run_window_experiment(m, 1, 4, cfg);
  EXPECT_TRUE(inside(postprocess_window(m, 1, 4).success, e.interval));
}

TEST(Mle, MedianRule) {
  const std::vector<long long> odd{9, 3, 5};
  const auto a = mle_estimate(odd);
  EXPECT_EQ(a.lower, 5);
  EXPECT_EQ(a.upper, 5);
  EXPECT_EQ(a.canonical, 5);
  const std::vector<long long> even{4, 2};
  const auto b = mle_estimate(even);
  EXPECT_EQ(b.lower, 2);
  EXPECT_EQ(b.upper, 4);
  EXPECT_EQ(b.canonical, 2);
  const std::vector<long long> one{7};
  EXPECT_EQ(mle_estimate(one).canonical, 7);
  EXPECT_THROW(mle_estimate(std::vector<long long>{}), InputError);
}

TEST(Mle, MatchesBruteForceArgmin) {
  Substream s(123, 0);
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t l = 1 + s.next_u64() % 9;
    std::vector<long long> m(l);
    for (auto& x : m) x = static_cast<long long>(s.next_u64() % 15) - 4;
    const auto e = mle_estimate(m);
    const auto [first, last] = brute_argmin(m);
    EXPECT_EQ(e.lower, first);
    EXPECT_EQ(e.upper, last);
  }
}

TEST(Mle, SingleRunEqualsSingleShot) {
  const auto m = outcome_model(uniform(0.4, 5));
  ExperimentConfig cfg;
  cfg.trials = 20000;
  cfg.seed = 8;
  cfg.keep_trials = false;
  const auto r = mle_experiment(m, 1, cfg);
  EXPECT_EQ(r.hits, run_experiment(m, cfg).successes);
  EXPECT_NEAR(r.gamma, 0.4, 1e-12);
}

TEST(Mle, RepetitionBeatsSingleShot) {
  const auto m = outcome_model(uniform(0.5, 4));
  ExperimentConfig cfg;
  cfg.trials = 100000;
  cfg.seed = 17;
  cfg.true_change_point = 2;
  const auto r = mle_experiment(m, 3, cfg);
  EXPECT_GT(r.interval.lower, 0.5);
  const auto lap = mle_experiment(m, 3, cfg, MleSampler::laplace);
  EXPECT_GT(lap.interval.lower, 0.5);
  EXPECT_THROW(mle_experiment(outcome_model(std::vector<double>{0.2, 0.5}), 3, cfg), InputError);
}

TEST(Mle, DiscreteLaplaceSampler) {
  const double zeta = 0.4;
  Substream s(77, 0);
  const std::size_t total = 400000;
  std::vector<std::size_t> counts(41, 0);
  for (std::size_t i = 0; i < total; ++i) {
    const long long k = std::clamp<long long>(sample_discrete_laplace(zeta, s), -20, 20);
    ++counts[static_cast<std::size_t>(k + 20)];
  }
  std::vector<double> probs(41);
  for (int k = -20; k <= 20; ++k) probs[static_cast<std::size_t>(k + 20)] = (1 - zeta) / (1 + zeta) * std::pow(zeta, std::abs(k));
  EXPECT_GT(chi_square_p(probs, counts, total), 1e-3);
}
