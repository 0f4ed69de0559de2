// One line per acceptance criterion; exit status is nonzero if any line fails.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qcp/certificate.hpp"
#include "qcp/errors.hpp"
#include "qcp/hamiltonian.hpp"
#include "qcp/io.hpp"
#include "qcp/sdp.hpp"
#include "qcp/simulator.hpp"
#include "qcp/strategy.hpp"

using namespace qcp;

namespace {

constexpr double kPi = std::numbers::pi;
const double kGamma = std::sin(kPi / 20);

struct Outcome {
  bool pass = false;
  std::string detail;
};

ComplexMatrix phase(double theta) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(1, 1) = std::polar(1.0, theta);
  return m;
}

ChangePointProblem fig_pair(std::size_t n) { return ChangePointProblem::repeated(ComplexMatrix::Identity(2, 2), phase(kPi / 10), n); }

double formula(std::size_t n) { return (static_cast<double>(n) * kGamma + 1.0) / static_cast<double>(n + 1); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome theorem_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t n = 1; n <= 8; ++n) worst = std::max(worst, std::abs(build_strategy(fig_pair(n)).success() - formula(n)));
  const double t = seconds_since(t0);
  return {worst <= 1e-8 && t < 10.0, fmt::format("max |P - formula| = {:.2e}, {:.2f} s", worst, t)};
}

Outcome sandwich_check() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  bool holds = true;
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto p = fig_pair(n);
    const auto c = build_certificate(p);
    const auto s = sandwich(p, c);
    holds = holds && c.verdict && s.holds;
    worst = std::max({worst, std::abs(s.strategy - s.upper), std::abs(s.strategy - formula(n)), std::abs(s.upper - formula(n))});
  }
  const double t = seconds_since(t0);
  return {holds && worst <= 1e-5 && t < 60.0, fmt::format("max pairwise gap = {:.2e}, {:.2f} s", worst, t)};
}

Outcome tester_sdp_check() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::size_t n = 1; n <= 2; ++n) {
    const auto p = fig_pair(n);
    std::vector<ComplexMatrix> chois;
    for (std::size_t m = 0; m <= n; ++m) chois.push_back(process_choi(p, m));
    worst = std::max(worst, std::abs(sdp::solve_tester_sdp(chois, 2, n).value - formula(n)));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-5 && t < 120.0, fmt::format("max |SDP - formula| = {:.2e}, {:.2f} s", worst, t)};
}

Outcome separable_check() {
  const auto gap = gap_single(ComplexMatrix::Identity(2, 2), phase(kPi / 10));
  const double d1 = std::abs(sdp::separable_baseline(gap, 1) - formula(1));
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 3; n <= 8; ++n) {
    sdp::Options o;
    o.max_total_dim = std::max<std::size_t>(o.max_total_dim, (n + 1) * (n + 1));
    min_margin = std::min(min_margin, formula(n) - sdp::separable_baseline(gap, n, o));
  }
  return {d1 <= 1e-6 && min_margin > 1e-4, fmt::format("N=1 gap {:.2e}, min P - P_sep over N=3..8 = {:.4e}", d1, min_margin)};
}

Outcome outcome_model_check() {
  Substream rng(20240601, 0);
  double col = 0.0, diag = 0.0, lap = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.next_u64() % 8;
    std::vector<double> g(n);
    for (auto& x : g) x = 1e-3 + (1 - 2e-3) * rng.next_double();
    const auto m = outcome_model(g);
    for (Eigen::Index c = 0; c <= static_cast<Eigen::Index>(n); ++c) col = std::max(col, std::abs(m.probs.col(c).sum() - 1.0));
    diag = std::max(diag, std::abs(m.success() - max_success_probability(g)));
    const double u = g[0];
    const auto mu = outcome_model(std::vector<double>(n, u));
    const double z = zeta_of(u);
    for (Eigen::Index r = 1; r < static_cast<Eigen::Index>(n); ++r)
      for (Eigen::Index c = 1; c < static_cast<Eigen::Index>(n); ++c)
        lap = std::max(lap, std::abs(mu.probs(r, c) - (1 - z) / (1 + z) * std::pow(z, std::abs(r - c))));
  }
  const bool ok = col <= 1e-12 && diag <= 1e-12 && lap <= 1e-12;
  return {ok, fmt::format("column {:.1e}, diagonal {:.1e}, Laplace {:.1e}", col, diag, lap)};
}

Outcome born_check() {
  double worst = 0.0;
  int composite = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t n = 1 + seed % 4, r = 1 + seed % 2;
    ChangePointProblem p;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<StepPair> seg;
      for (std::size_t s = 0; s < r; ++s) {
        const ComplexMatrix u0 = random_unitary(2, seed * 977 + k * 13 + s);
        seg.push_back({u0, u0 * random_unitary(2, seed * 1223 + k * 17 + s + 5)});
      }
      p.segments.push_back(seg);
    }
    const auto gammas = gammas_of(segment_gaps(analyze_segments(p)));
    const RealMatrix expected = outcome_model(gammas).probs;
    try {
      worst = std::max(worst, max_abs(RealMatrix(build_strategy(p).born - expected)));
    } catch (const SplitRequired&) {
      ++composite;
      worst = std::max(worst, max_abs(RealMatrix(build_composite_strategy(p).born - expected)));
    }
  }
  return {worst <= 1e-8, fmt::format("max |Born - model| = {:.2e} over 50 pairs ({} split)", worst, composite)};
}

Outcome gram_check() {
  auto gram = [](double a) {
    ComplexMatrix g(3, 3);
    g << 1.0, 0.8, a, 0.8, 1.0, 0.8, a, 0.8, 1.0;
    return g;
  };
  const double edge = psd_check(gram(0.28), 1e-9).min_eigenvalue;
  const double below = psd_check(gram(0.28 - 1e-3), 0.0).min_eigenvalue;
  const std::vector<double> pri(3, 1.0 / 3.0);
  double best = -1.0;
  int best_i = -1;
  for (int i = 0; i < 50; ++i) {
    const double a = 0.28 + 0.72 * i / 49.0;
    const double v = sdp::min_error_discrimination(gram(a), pri);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  const bool ok = std::abs(edge) <= 1e-9 && below < 0.0 && best_i > 0 && best_i < 49;
  return {ok, fmt::format("min eigenvalue at 0.28 = {:.1e}, maximizer a = {:.4f}", edge, 0.28 + 0.72 * best_i / 49.0)};
}

Outcome hamiltonian_check() {
  const auto pair = hamiltonian_pair_from_json(io::read_json_file(std::string(QCP_TEST_DATA) + "/chirp.json"));
  const std::vector<double> cand{0.0, 0.5, 1.0};
  const std::vector<std::size_t> rs{8, 16, 32, 64, 128};
  const auto rep = convergence_report(pair, cand, rs);
  const double order = empirical_order(rs, rep.max_discrepancy);
  const double last = rep.max_discrepancy.back();
  return {order >= 1.8 && last <= 1e-4, fmt::format("order {:.3f}, final discrepancy {:.2e}", order, last)};
}

Outcome estimator_check() {
  const std::vector<double> g{0.3, 0.6, 0.1, 0.45, 0.8, 0.25};
  const auto model = outcome_model(g);
  bool inside = true;
  std::string where;
  for (auto [n0, n1] : std::vector<std::pair<std::size_t, std::size_t>>{{0, 6}, {1, 4}, {2, 5}}) {
    double sum = 1.0;
    for (std::size_t k = n0 + 1; k <= n1; ++k) sum += g[k - 1];
    const double closed = sum / static_cast<double>(n1 - n0 + 1);
    ExperimentConfig cfg;
    cfg.trials = 100000;
    cfg.seed = 1000 + n0;
    cfg.keep_trials = false;
    const auto e = run_window_experiment(model, n0, n1, cfg);
    const bool in = e.interval.lower <= closed && closed <= e.interval.upper;
    inside = inside && in && std::abs(postprocess_window(model, n0, n1).success - closed) <= 1e-12;
    where += fmt::format(" [{},{}]:{}", n0, n1, in ? "in" : "out");
  }
  Substream rng(31337, 0);
  int mismatches = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t l = 1 + rng.next_u64() % 10;
    std::vector<long long> m(l);
    for (auto& x : m) x = static_cast<long long>(rng.next_u64() % 21) - 10;
    long long best = std::numeric_limits<long long>::max(), first = 0, last = 0;
    for (long long n = -12; n <= 12; ++n) {
      long long s = 0;
      for (long long x : m) s += std::llabs(x - n);
      if (s < best) {
        best = s;
        first = last = n;
      } else if (s == best) {
        last = n;
      }
    }
    const auto e = mle_estimate(m);
    if (e.lower != first || e.upper != last) ++mismatches;
  }
  return {inside && mismatches == 0, fmt::format("windows{}; median mismatches {}/1000", where, mismatches)};
}

std::string run_binary(const std::string& args) {
  const std::string cmd = std::string(QCP_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* f = popen(cmd.c_str(), "r");
  if (f == nullptr) return "<popen failed>";
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), f)) > 0) out.append(buf.data(), n);
  const int status = pclose(f);
  return out + fmt::format("<exit {}>", status);
}

Outcome determinism_check() {
  const std::string d = QCP_TEST_DATA;
  const std::string pair = "--u0 " + d + "/pair_u0.json --u1 " + d + "/pair_u1.json";
  const std::vector<std::string> runs{
      "simulate --config " + d + "/simulate.ini " + pair,
      "simulate --n 3 --trials 2000 --seed 99 --mode born " + pair,
      "mle --n 5 --L 3 --trials 5000 --seed 3 " + pair,
      "compare --n-max 4 " + pair,
      "certify --n 2 " + pair,
      "strategy --n 3 " + pair,
      "model --n 4 " + pair,
      "hamiltonian --hamiltonian " + d + "/chirp.json --n 2 --r-list 4,8",
  };
  int differing = 0;
  for (const auto& r : runs) {
    if (run_binary(r) != run_binary(r)) ++differing;
  }
  return {differing == 0, fmt::format("{} of {} commands differ across runs", differing, runs.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"optimal strategy reproduces the closed form", theorem_reproduction},
      {"primal/dual sandwich", sandwich_check},
      {"independent tester SDP", tester_sdp_check},
      {"separable baseline ordering", separable_check},
      {"outcome model properties", outcome_model_check},
      {"Born-rule equivalence", born_check},
      {"three-state Gram family", gram_check},
      {"Hamiltonian convergence", hamiltonian_check},
      {"window and median estimators", estimator_check},
      {"CLI determinism", determinism_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failed;
    std::cout << fmt::format("[{}] criterion {}: {} ({})", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - static_cast<std::size_t>(failed), criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
