#include "qcp/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qcp/errors.hpp"
#include "qcp/io.hpp"

namespace qcp {

namespace {

constexpr int kMaxDepth = 20;
constexpr int kKinkPanels = 64;

// Samples strictly inside [lo, hi] so that table pieces see their own sample at the ends.
struct Simpson {
  const HamiltonianPair& pair;
  double lo;
  double hi;

  double f(double t) const {
    const double inset = 1e-12 * (hi - lo);
    return spectral_spread(pair, std::clamp(t, lo + inset, hi - inset));
  }

  double adaptive(double a, double b, double fa, double fm, double fb, double whole, double eps,
                  int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth >= kMaxDepth || std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
    return adaptive(a, m, fa, flm, fm, left, eps / 2.0, depth + 1) +
           adaptive(m, b, fm, frm, fb, right, eps / 2.0, depth + 1);
  }

  double integrate(double a, double b, double eps) const {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive(a, b, fa, fm, fb, whole, eps, 0);
  }
};

// Golden-section search for the extremum of sign*f on [a, b].
double golden_extremum(const HamiltonianPair& pair, double a, double b, double sign) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = sign * spectral_spread(pair, c);
  double fd = sign * spectral_spread(pair, d);
  while (b - a > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = sign * spectral_spread(pair, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = sign * spectral_spread(pair, d);
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> detect_kinks(const HamiltonianPair& pair, double lo, double hi) {
  std::vector<double> kinks;
  if (pair.h0.kind == HamiltonianKind::table || pair.h1.kind == HamiltonianKind::table) return kinks;
  std::vector<double> t(kKinkPanels + 1);
  std::vector<double> f(kKinkPanels + 1);
  for (int i = 0; i <= kKinkPanels; ++i) {
    t[i] = lo + (hi - lo) * i / kKinkPanels;
    f[i] = spectral_spread(pair, t[i]);
  }
  for (int i = 1; i < kKinkPanels; ++i) {
    const double left = f[i] - f[i - 1];
    const double right = f[i + 1] - f[i];
    if (left * right < 0.0) {
      const double sign = left < 0.0 ? 1.0 : -1.0;
      kinks.push_back(golden_extremum(pair, t[i - 1], t[i + 1], sign));
    }
  }
  return kinks;
}

std::array<double, 3> field_at(const FieldParams& p, double t) {
  std::array<double, 3> h{};
  for (int a = 0; a < 3; ++a) {
    h[a] = p.offset[a] + p.slope[a] * t + p.amplitude[a] * std::cos(p.frequency * t + p.phase);
  }
  return h;
}

std::array<double, 3> vec3(const nlohmann::json& j, const char* key) {
  std::array<double, 3> v{0.0, 0.0, 0.0};
  if (!j.contains(key)) return v;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw InputError(fmt::format("\"{}\" must be a 3-vector", key));
  for (std::size_t i = 0; i < 3; ++i) {
    if (!a[i].is_number()) throw InputError(fmt::format("\"{}\" must contain numbers", key));
    v[i] = a[i].get<double>();
  }
  return v;
}

HamiltonianSpec parametric_from_json(const nlohmann::json& j, double t_start, double t_end) {
  if (!j.is_object()) throw InputError("parametric Hamiltonian must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    static const std::vector<std::string> allowed{"kind", "offset", "slope", "amplitude", "frequency",
                                                  "phase"};
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InputError(fmt::format("unknown Hamiltonian key \"{}\"", key));
    }
  }
  const auto kind = hamiltonian_kind_from_string(j.value("kind", std::string("constant")));
  if (kind == HamiltonianKind::table) throw InputError("table Hamiltonians use the table file format");
  FieldParams p;
  p.offset = vec3(j, "offset");
  p.slope = vec3(j, "slope");
  p.amplitude = vec3(j, "amplitude");
  p.frequency = j.value("frequency", 0.0);
  p.phase = j.value("phase", 0.0);
  return HamiltonianSpec::parametric(kind, p, t_start, t_end);
}

nlohmann::json field_to_json(const HamiltonianSpec& h) {
  return {{"kind", to_string(h.kind)},
          {"offset", h.field.offset},
          {"slope", h.field.slope},
          {"amplitude", h.field.amplitude},
          {"frequency", h.field.frequency},
          {"phase", h.field.phase}};
}

}  // namespace

std::string to_string(HamiltonianKind kind) {
  switch (kind) {
    case HamiltonianKind::table:
      return "table";
    case HamiltonianKind::constant:
      return "constant";
    case HamiltonianKind::linear_chirp:
      return "linear_chirp";
    case HamiltonianKind::sinusoidal:
      return "sinusoidal";
  }
  return "unknown";
}

HamiltonianKind hamiltonian_kind_from_string(const std::string& name) {
  if (name == "table") return HamiltonianKind::table;
  if (name == "constant") return HamiltonianKind::constant;
  if (name == "linear_chirp") return HamiltonianKind::linear_chirp;
  if (name == "sinusoidal") return HamiltonianKind::sinusoidal;
  throw InputError(fmt::format("unknown Hamiltonian kind \"{}\"", name));
}

HamiltonianSpec HamiltonianSpec::table(std::vector<double> times, std::vector<ComplexMatrix> samples) {
  HamiltonianSpec h;
  h.kind = HamiltonianKind::table;
  h.dim = samples.empty() ? 0 : static_cast<std::size_t>(samples.front().rows());
  h.times = std::move(times);
  h.samples = std::move(samples);
  if (!h.times.empty()) {
    h.t_start = h.times.front();
    h.t_end = h.times.back();
  }
  h.validate();
  return h;
}

HamiltonianSpec HamiltonianSpec::parametric(HamiltonianKind kind, const FieldParams& field,
                                            double t_start, double t_end) {
  HamiltonianSpec h;
  h.kind = kind;
  h.dim = 2;
  h.field = field;
  h.t_start = t_start;
  h.t_end = t_end;
  h.validate();
  return h;
}

void HamiltonianSpec::validate() const {
  if (!(t_start < t_end)) throw InputError("Hamiltonian time range must satisfy t_start < t_end");
  if (kind != HamiltonianKind::table) {
    if (dim != 2) throw InputError("parametric Hamiltonians are qubit fields (dim 2)");
    return;
  }
  if (times.size() < 2) throw InputError("Hamiltonian table needs at least two times");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InputError("Hamiltonian table times must be strictly increasing");
  }
  if (samples.size() != times.size() && samples.size() + 1 != times.size()) {
    throw InputError(fmt::format("Hamiltonian table has {} samples for {} times", samples.size(),
                                 times.size()));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& m = samples[i];
    if (m.rows() != static_cast<Eigen::Index>(dim) || m.cols() != static_cast<Eigen::Index>(dim)) {
      throw InputError(fmt::format("Hamiltonian sample {} has the wrong dimension", i));
    }
    if (!is_hermitian(m)) throw InputError(fmt::format("Hamiltonian sample {} is not Hermitian", i));
  }
}

ComplexMatrix HamiltonianSpec::at(double t) const {
  if (kind == HamiltonianKind::table) {
    if (t < times.front() || t > times.back()) {
      throw InputError(fmt::format("time {} outside the Hamiltonian table", t));
    }
    auto it = std::upper_bound(times.begin(), times.end(), t);
    auto i = static_cast<std::size_t>(std::distance(times.begin(), it));
    i = i == 0 ? 0 : i - 1;
    if (i >= samples.size()) i = samples.size() - 1;
    return samples[i];
  }
  const auto h = field_at(field, t);
  return h[0] * pauli_x() + h[1] * pauli_y() + h[2] * pauli_z();
}

std::vector<double> HamiltonianSpec::breakpoints() const {
  if (kind != HamiltonianKind::table) return {};
  return {times.begin() + 1, times.end() - 1};
}

void HamiltonianPair::validate() const {
  h0.validate();
  h1.validate();
  if (h0.dim != h1.dim) throw InputError("H0 and H1 must have the same dimension");
}

double HamiltonianPair::t_start() const { return std::max(h0.t_start, h1.t_start); }
double HamiltonianPair::t_end() const { return std::min(h0.t_end, h1.t_end); }

SegmentGrid SegmentGrid::uniform(std::span<const double> candidates, std::size_t r) {
  if (candidates.size() < 2) throw InputError("at least two candidate times are required");
  if (r == 0) throw InputError("R must be at least 1");
  SegmentGrid g;
  g.r = r;
  for (std::size_t k = 0; k + 1 < candidates.size(); ++k) {
    const double a = candidates[k];
    const double b = candidates[k + 1];
    if (!(b > a)) throw InputError("candidate times must be strictly increasing");
    for (std::size_t s = 0; s < r; ++s) g.tau.push_back(a + (b - a) * static_cast<double>(s) / static_cast<double>(r));
  }
  g.tau.push_back(candidates.back());
  return g;
}

ChangePointProblem discretize(const HamiltonianPair& pair, const SegmentGrid& grid) {
  pair.validate();
  if (grid.tau.size() < 2 || (grid.tau.size() - 1) % grid.r != 0) throw InputError("malformed segment grid");
  const double tol = 1e-12 * std::max(1.0, std::abs(pair.t_end()));
  if (grid.tau.front() < pair.t_start() - tol || grid.tau.back() > pair.t_end() + tol) {
    throw InputError(fmt::format("grid [{}, {}] lies outside the Hamiltonian range [{}, {}]",
                                 grid.tau.front(), grid.tau.back(), pair.t_start(), pair.t_end()));
  }
  ChangePointProblem p;
  p.segments.resize(grid.n());
  for (std::size_t k = 0; k < grid.n(); ++k) {
    for (std::size_t s = 0; s < grid.r; ++s) {
      const double a = grid.tau[k * grid.r + s];
      const double b = grid.tau[k * grid.r + s + 1];
      const double mid = 0.5 * (a + b);
      p.segments[k].push_back({expm_skew(pair.h0.at(mid), b - a), expm_skew(pair.h1.at(mid), b - a)});
    }
  }
  return p;
}

double spectral_spread(const HamiltonianPair& pair, double t) {
  const ComplexMatrix diff = pair.h1.at(t) - pair.h0.at(t);
  const auto eig = eig_hermitian(diff);
  return eig.values(eig.values.size() - 1) - eig.values(0);
}

double integrate_spread(const HamiltonianPair& pair, double t_lo, double t_hi, double tol) {
  if (!(t_lo < t_hi)) throw InputError("integration interval must satisfy t_lo < t_hi");
  std::vector<double> cuts{t_lo, t_hi};
  for (const auto* h : {&pair.h0, &pair.h1}) {
    for (double b : h->breakpoints()) {
      if (b > t_lo && b < t_hi) cuts.push_back(b);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> pieces;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    pieces.push_back(cuts[i]);
    for (double k : detect_kinks(pair, cuts[i], cuts[i + 1])) {
      if (k > cuts[i] && k < cuts[i + 1]) pieces.push_back(k);
    }
  }
  pieces.push_back(t_hi);
  std::sort(pieces.begin(), pieces.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
    const double a = pieces[i];
    const double b = pieces[i + 1];
    if (b <= a) continue;
    const Simpson s{pair, a, b};
    total += s.integrate(a, b, tol * (b - a) / (t_hi - t_lo));
  }
  return total;
}

double delta_clamp(double theta) { return std::sin(std::min(theta, std::numbers::pi) / 2.0); }

double gamma_hamiltonian(const HamiltonianPair& pair, double t_lo, double t_hi) {
  return delta_clamp(integrate_spread(pair, t_lo, t_hi));
}

std::vector<double> hamiltonian_gammas(const HamiltonianPair& pair, std::span<const double> candidates) {
  if (candidates.size() < 2) throw InputError("at least two candidate times are required");
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < candidates.size(); ++k) {
    if (!(candidates[k + 1] > candidates[k])) throw InputError("candidate times must be strictly increasing");
    out.push_back(gamma_hamiltonian(pair, candidates[k], candidates[k + 1]));
  }
  return out;
}

double hamiltonian_success_probability(const HamiltonianPair& pair,
                                       std::span<const double> candidates) {
  const auto g = hamiltonian_gammas(pair, candidates);
  return max_success_probability(g);
}

ConvergenceReport convergence_report(const HamiltonianPair& pair, std::span<const double> candidates,
                                     std::span<const std::size_t> r_list) {
  for (std::size_t i = 1; i < r_list.size(); ++i) {
    if (r_list[i] <= r_list[i - 1]) throw InputError("R list must be increasing");
  }
  ConvergenceReport rep;
  const auto gammas = hamiltonian_gammas(pair, candidates);
  rep.success = max_success_probability(gammas);
  rep.r_list.assign(r_list.begin(), r_list.end());
  for (std::size_t r : r_list) {
    const auto problem = discretize(pair, SegmentGrid::uniform(candidates, r));
    const auto segs = analyze_segments(problem);
    std::vector<double> hats;
    double worst = 0.0;
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const double hat = segs[k].gap.gamma;
      const double disc = std::abs(hat - gammas[k]);
      worst = std::max(worst, disc);
      hats.push_back(hat);
      rep.rows.push_back({r, k + 1, hat, gammas[k], disc});
    }
    rep.success_hat.push_back(max_success_probability(hats));
    rep.max_discrepancy.push_back(worst);
  }
  return rep;
}

double empirical_order(std::span<const std::size_t> r_list, std::span<const double> errors) {
  if (r_list.size() != errors.size() || r_list.size() < 2) {
    throw InputError("empirical_order needs matching lists of length >= 2");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const auto n = static_cast<double>(r_list.size());
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    if (!(errors[i] > 0.0)) throw NumericalError("empirical_order: non-positive error value");
    const double x = std::log(static_cast<double>(r_list[i]));
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

HamiltonianPair hamiltonian_pair_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("Hamiltonian file must contain a JSON object");
  if (!j.contains("H0") || !j.contains("H1")) throw InputError("Hamiltonian file needs \"H0\" and \"H1\"");
  HamiltonianPair pair;
  if (j.at("H0").is_array()) {
    for (const auto& [key, value] : j.items()) {
      if (key != "dim" && key != "times" && key != "H0" && key != "H1") {
        throw InputError(fmt::format("unknown Hamiltonian table key \"{}\"", key));
      }
    }
    if (!j.contains("times") || !j.at("times").is_array()) throw InputError("table needs a \"times\" array");
    std::vector<double> times;
    for (const auto& t : j.at("times")) {
      if (!t.is_number()) throw InputError("table times must be numbers");
      times.push_back(t.get<double>());
    }
    auto read = [&](const char* key) {
      std::vector<ComplexMatrix> out;
      for (const auto& m : j.at(key)) out.push_back(io::matrix_from_json(m));
      return out;
    };
    pair.h0 = HamiltonianSpec::table(times, read("H0"));
    pair.h1 = HamiltonianSpec::table(times, read("H1"));
    if (j.contains("dim") && j.at("dim").get<std::size_t>() != pair.h0.dim) {
      throw InputError("table \"dim\" does not match the sample dimension");
    }
  } else {
    for (const auto& [key, value] : j.items()) {
      if (key != "t_start" && key != "t_end" && key != "H0" && key != "H1") {
        throw InputError(fmt::format("unknown Hamiltonian key \"{}\"", key));
      }
    }
    const double t0 = j.value("t_start", 0.0);
    const double t1 = j.value("t_end", 1.0);
    pair.h0 = parametric_from_json(j.at("H0"), t0, t1);
    pair.h1 = parametric_from_json(j.at("H1"), t0, t1);
  }
  pair.validate();
  return pair;
}

nlohmann::json hamiltonian_pair_to_json(const HamiltonianPair& pair) {
  if (pair.h0.kind == HamiltonianKind::table) {
    nlohmann::json h0 = nlohmann::json::array();
    nlohmann::json h1 = nlohmann::json::array();
    for (const auto& m : pair.h0.samples) h0.push_back(io::matrix_to_json(m));
    for (const auto& m : pair.h1.samples) h1.push_back(io::matrix_to_json(m));
    return {{"dim", pair.h0.dim}, {"times", pair.h0.times}, {"H0", h0}, {"H1", h1}};
  }
  return {{"t_start", pair.t_start()}, {"t_end", pair.t_end()}, {"H0", field_to_json(pair.h0)},
          {"H1", field_to_json(pair.h1)}};
}

}  // namespace qcp
