#include "qcp/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "qcp/certificate.hpp"
#include "qcp/errors.hpp"
#include "qcp/hamiltonian.hpp"
#include "qcp/io.hpp"
#include "qcp/sdp.hpp"
#include "qcp/simulator.hpp"
#include "qcp/spectral.hpp"
#include "qcp/strategy.hpp"

namespace qcp::cli {

namespace {

using json = nlohmann::json;

class CertificationFailed : public Error {
 public:
  using Error::Error;
};

struct Params {
  std::string u0, u1, hamiltonian, y_file, save_y;
  std::size_t n = 2;
  std::size_t n_max = 8;
  std::size_t r = 1;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  std::string window;
  std::string out;
  std::string format;
  std::string mode = "analytic";
  long long true_n = -1;
  std::size_t l = 3;
  std::string sampler = "truncated";
  std::string r_list = "1,2,4,8,16,32";
  std::string candidates;
  std::size_t max_dim = 4096;
};

std::string fmt_real(double v) { return std::isnan(v) ? std::string("nan") : io::format_real(v); }

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

template <typename T>
T parse_number(const std::string& s, const std::string& what) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (!in || !in.eof()) throw InputError(fmt::format("{}: cannot parse '{}'", what, s));
  return v;
}

/// Resolved configuration of the active command, in declaration order.
std::vector<std::pair<std::string, std::string>> resolved(const CLI::App& sub) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("command", sub.get_name());
  if (const auto* parent = sub.get_parent()) {
    const auto* cfg = parent->get_config_ptr();
    kv.emplace_back("config", cfg != nullptr && cfg->count() > 0 ? cfg->as<std::string>() : std::string());
  }
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    kv.emplace_back(name, value);
  }
  return kv;
}

class Output {
 public:
  Output(const CLI::App& sub, const Params& p) : config_(resolved(sub)), format_(p.format), path_(p.out) {
    if (format_ != "csv" && format_ != "json") throw InputError(fmt::format("unknown format '{}'", format_));
  }
  bool csv() const { return format_ == "csv"; }

  std::string csv_header() const {
    std::string h;
    for (const auto& [k, v] : config_) h += fmt::format("# {} = {}\n", k, v);
    return h;
  }
  json config() const {
    json c = json::object();
    for (const auto& [k, v] : config_) c[k] = v;
    return c;
  }
  void write(const std::string& body, std::ostream& out) const {
    if (path_.empty()) {
      out << body;
      return;
    }
    std::ofstream f(path_, std::ios::binary);
    if (!f) throw InputError(fmt::format("cannot open '{}' for writing", path_));
    f << body;
  }
  void write_json(json j, std::ostream& out) const {
    j["config"] = config();
    write(j.dump(2) + "\n", out);
  }

 private:
  std::vector<std::pair<std::string, std::string>> config_;
  std::string format_;
  std::string path_;
};

ComplexMatrix load_unitary(const std::string& path, const char* flag) {
  if (path.empty()) throw InputError(fmt::format("{} is required", flag));
  ComplexMatrix u = io::read_matrix_file(path);
  if (u.rows() != u.cols()) throw InputError(fmt::format("{}: matrix in '{}' is not square", flag, path));
  if (!is_unitary(u)) throw InputError(fmt::format("{}: matrix in '{}' is not unitary", flag, path));
  return u;
}

std::pair<ComplexMatrix, ComplexMatrix> load_pair(const Params& p) {
  auto u0 = load_unitary(p.u0, "--u0");
  auto u1 = load_unitary(p.u1, "--u1");
  if (u0.rows() != u1.rows()) throw InputError("--u0 and --u1 have different dimensions");
  return {std::move(u0), std::move(u1)};
}

ChangePointProblem load_problem(const Params& p) {
  if (p.n < 1) throw InputError("--n must be at least 1");
  if (p.r < 1) throw InputError("--r must be at least 1");
  auto [u0, u1] = load_pair(p);
  return ChangePointProblem::repeated(u0, u1, p.n, p.r);
}

HamiltonianPair load_hamiltonian(const Params& p) {
  if (p.hamiltonian.empty()) throw InputError("--hamiltonian is required");
  auto pair = hamiltonian_pair_from_json(io::read_json_file(p.hamiltonian));
  pair.validate();
  return pair;
}

std::vector<double> candidate_times(const Params& p, const HamiltonianPair& pair) {
  std::vector<double> c;
  if (!p.candidates.empty()) {
    for (const auto& s : split(p.candidates, ',')) c.push_back(parse_number<double>(s, "--candidates"));
  } else {
    if (p.n < 1) throw InputError("--n must be at least 1");
    const double a = pair.t_start(), b = pair.t_end();
    for (std::size_t k = 0; k <= p.n; ++k) c.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(p.n));
  }
  return c;
}

std::string vertices_csv(const EigenPolygon& poly) {
  std::string s;
  for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
    s += fmt::format("vertex,{},{},{}\n", i, fmt_real(poly.vertices[i].real()), fmt_real(poly.vertices[i].imag()));
  }
  return s;
}

int cmd_gamma(const CLI::App& sub, const Params& p, std::ostream& out) {
  const Output o(sub, p);
  if (!p.hamiltonian.empty()) {
    const auto pair = load_hamiltonian(p);
    const auto cand = candidate_times(p, pair);
    const auto gammas = hamiltonian_gammas(pair, cand);
    json rows = json::array();
    std::string body = o.csv_header() + "k,t_lo,t_hi,integral,gamma\n";
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      const double integral = integrate_spread(pair, cand[k], cand[k + 1]);
      body += fmt::format("{},{},{},{},{}\n", k + 1, fmt_real(cand[k]), fmt_real(cand[k + 1]), fmt_real(integral),
                          fmt_real(gammas[k]));
      rows.push_back({{"k", k + 1}, {"t_lo", cand[k]}, {"t_hi", cand[k + 1]}, {"integral", integral}, {"gamma", gammas[k]}});
    }
    if (o.csv()) {
      o.write(body, out);
    } else {
      o.write_json({{"intervals", rows}}, out);
    }
    return kOk;
  }
  auto [u0, u1] = load_pair(p);
  const auto gap = gap_single(u0, u1);
  const auto poly = eigen_polygon(u0, u1);
  if (o.csv()) {
    std::string body = o.csv_header() + "quantity,index,re,im\n";
    body += fmt::format("lambda0,0,{},{}\n", fmt_real(gap.lambda0.real()), fmt_real(gap.lambda0.imag()));
    body += fmt::format("lambda1,0,{},{}\n", fmt_real(gap.lambda1.real()), fmt_real(gap.lambda1.imag()));
    body += fmt::format("gamma,0,{},0\n", fmt_real(gap.gamma));
    body += fmt::format("zeta,0,{},0\n", fmt_real(gap.zeta));
    body += fmt::format("origin_enclosed,0,{},0\n", gap.origin_enclosed ? 1 : 0);
    body += vertices_csv(poly);
    o.write(body, out);
  } else {
    json verts = json::array();
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) verts.push_back(complex_json(poly.vertices[i]));
    o.write_json({{"lambda0", complex_json(gap.lambda0)},
                  {"lambda1", complex_json(gap.lambda1)},
                  {"gamma", gap.gamma},
                  {"zeta", gap.zeta},
                  {"origin_enclosed", gap.origin_enclosed},
                  {"vertices", verts}},
                 out);
  }
  return kOk;
}

int cmd_compare(const CLI::App& sub, const Params& p, std::ostream& out) {
  const Output o(sub, p);
  if (p.n_max < 1 || p.n_max > 12) throw InputError("--n-max must lie in 1..12");
  auto [u0, u1] = load_pair(p);
  const auto gap = gap_single(u0, u1);
  const double gamma = gap.gamma;
  std::string body = o.csv_header() + "N,P_formula,P_sep_sdp,P_infinity,status\n";
  json rows = json::array();
  for (std::size_t n = 1; n <= p.n_max; ++n) {
    const double formula = max_success_probability(std::vector<double>(n, gamma));
    double sep = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
    try {
      sdp::Options opt;
      opt.max_total_dim = std::max<std::size_t>(opt.max_total_dim, (n + 1) * (n + 1));
      sep = sdp::separable_baseline(gap, n, opt);
    } catch (const Error& e) {
      status = "sdp_failed";
      spdlog::warn("separable SDP failed at N={}: {}", n, e.what());
    }
    spdlog::info("N={} formula={} separable={}", n, formula, sep);
    body += fmt::format("{},{},{},{},{}\n", n, fmt_real(formula), fmt_real(sep), fmt_real(gamma), status);
    rows.push_back({{"N", n},
                    {"P_formula", formula},
                    {"P_sep_sdp", std::isnan(sep) ? json(nullptr) : json(sep)},
                    {"P_infinity", gamma},
                    {"status", status}});
  }
  if (o.csv()) {
    o.write(body, out);
  } else {
    o.write_json({{"rows", rows}}, out);
  }
  return kOk;
}

int cmd_certify(const CLI::App& sub, const Params& p, std::ostream& out) {
  const Output o(sub, p);
  const auto problem = load_problem(p);
  CertificateOptions opt;
  opt.max_dim = p.max_dim;
  Certificate cert;
  std::optional<Sandwich> sw;
  if (!p.y_file.empty()) {
    opt.strict = false;
    const auto ys = segment_ys_from_json(io::read_json_file(p.y_file), problem.n());
    cert = certificate_from_y(problem, ys, opt);
  } else {
    cert = build_certificate(problem, opt);
  }
  if (!p.save_y.empty()) {
    std::vector<ComplexMatrix> ys;
    for (std::size_t k = 1; k <= problem.n(); ++k) {
      ys.push_back(sdp::solve_dy(segment_choi(problem, k, 0), segment_choi(problem, k, 1), problem.dim(), problem.r()).y);
    }
    std::ofstream f(p.save_y, std::ios::binary);
    if (!f) throw InputError(fmt::format("cannot open '{}' for writing", p.save_y));
    f << segment_ys_to_json(ys).dump(2) << "\n";
  }
  if (cert.verdict) sw = sandwich(problem, cert);
  const bool ok = cert.verdict && (!sw || sw->holds);

  if (o.csv()) {
    std::string body = o.csv_header() + "quantity,value\n";
    body += fmt::format("eta,{}\nq,{}\nq_discrepancy,{}\ncone_residual,{}\nmin_dominance,{}\n", fmt_real(cert.eta),
                        fmt_real(cert.q), fmt_real(cert.q_discrepancy), fmt_real(cert.cone.residual),
                        fmt_real(cert.min_dominance));
    for (std::size_t k = 0; k < cert.segment_reports.size(); ++k) {
      body += fmt::format("segment_{}_margin0,{}\nsegment_{}_margin1,{}\n", k + 1,
                          fmt_real(cert.segment_reports[k].margin0), k + 1, fmt_real(cert.segment_reports[k].margin1));
    }
    if (sw) {
      body += fmt::format("lower,{}\nstrategy,{}\nupper,{}\n", fmt_real(sw->lower), fmt_real(sw->strategy),
                          fmt_real(sw->upper));
    }
    body += fmt::format("verdict,{}\n", ok ? 1 : 0);
    o.write(body, out);
  } else {
    json j = certificate_to_json(cert);
    if (sw) {
      j["sandwich"] = {{"lower", std::isnan(sw->lower) ? json(nullptr) : json(sw->lower)},
                       {"strategy", sw->strategy},
                       {"formula", sw->formula},
                       {"upper", sw->upper},
                       {"tolerance", sw->tolerance},
                       {"holds", sw->holds}};
    }
    j["verdict"] = ok;
    o.write_json(j, out);
  }
  if (!ok) throw CertificationFailed("certificate rejected");
  return kOk;
}

struct Built {
  OutcomeModel model;
  RealMatrix born;
  json strategy;
};

Built build(const ChangePointProblem& problem) {
  Built b;
  const auto segs = analyze_segments(problem);
  bool perfect = false;
  for (const auto& s : segs) perfect = perfect || s.gap.perfect;
  if (perfect) {
    auto cs = build_composite_strategy(problem);
    b.model = cs.model;
    b.born = cs.born;
    json blocks = json::array();
    for (std::size_t i = 0; i < cs.blocks.size(); ++i) {
      json part = cs.parts[i].n == 0 ? json(nullptr) : strategy_to_json(cs.parts[i]);
      blocks.push_back({{"first", cs.blocks[i].first}, {"last", cs.blocks[i].second}, {"strategy", part}});
    }
    b.strategy = {{"composite", true}, {"gammas", cs.gammas}, {"blocks", blocks}, {"success", cs.success()}};
  } else {
    auto s = build_strategy(problem);
    b.model = s.model;
    b.born = s.born;
    b.strategy = strategy_to_json(s);
  }
  return b;
}

int cmd_strategy(const CLI::App& sub, const Params& p, std::ostream& out) {
  const Output o(sub, p);
  if (o.csv()) throw InputError("strategy output is JSON only");
  const auto b = build(load_problem(p));
  o.write_json({{"strategy", b.strategy}, {"model", model_to_json(b.model)}}, out);
  return kOk;
}

int cmd_model(const CLI::App& sub, const Params& p, std::ostream& out) {
  const Output o(sub, p);
  const auto problem = load_problem(p);
  const auto model = outcome_model(gammas_of(segment_gaps(analyze_segments(problem))));
  if (o.csv()) {
    std::string body = o.csv_header() + "m,n,p\n";
    for (Eigen::Index n = 0; n < model.probs.cols(); ++n) {
      for (Eigen::Index m = 0; m < model.probs.rows(); ++m) body += fmt::format("{},{},{}\n", m, n, fmt_real(model.probs(m, n)));
    }
    o.write(body, out);
  } else {
    o.write_json({{"model", model_to_json(model)}}, out);
  }
  return kOk;
}

std::pair<std::size_t, std::size_t> parse_window(const std::string& w) {
  const auto parts = split(w, ',');
  if (parts.size() != 2) throw InputError(fmt::format("--window expects n0,n1 (got '{}')", w));
  return {parse_number<std::size_t>(parts[0], "--window"), parse_number<std::size_t>(parts[1], "--window")};
}

ExperimentConfig experiment_config(const Params& p) {
  ExperimentConfig cfg;
  cfg.trials = p.trials;
  cfg.seed = p.seed;
  cfg.mode = sampling_mode_from_string(p.mode);
  if (p.true_n >= 0) cfg.true_change_point = static_cast<std::size_t>(p.true_n);
  return cfg;
}

int cmd_simulate(const CLI::App& sub, const Params& p, std::ostream& out) {
  const Output o(sub, p);
  const auto problem = load_problem(p);
  auto cfg = experiment_config(p);
  cfg.keep_trials = o.csv();
  const auto b = build(problem);
  EstimateRecord rec;
  std::optional<double> window_success;
  if (!p.window.empty()) {
    if (cfg.mode == SamplingMode::born) throw InputError("--window uses the analytic model; drop --mode born");
    const auto [n0, n1] = parse_window(p.window);
    window_success = postprocess_window(b.model, n0, n1).success;
    rec = run_window_experiment(b.model, n0, n1, cfg);
  } else {
    rec = run_experiment(b.model, cfg, &b.born);
  }
  const double expected = window_success ? *window_success : b.model.success();
  if (o.csv()) {
    std::string body = o.csv_header();
    body += fmt::format("# rate = {}\n# interval = {},{}\n# expected = {}\n", fmt_real(rec.rate),
                        fmt_real(rec.interval.lower), fmt_real(rec.interval.upper), fmt_real(expected));
    body += "trial,true_n,outcome_m,correct\n";
    for (const auto& t : rec.records) body += fmt::format("{},{},{},{}\n", t.trial, t.true_n, t.outcome, t.correct ? 1 : 0);
    o.write(body, out);
  } else {
    json j = estimate_to_json(rec);
    j["expected"] = expected;
    o.write_json(j, out);
  }
  return kOk;
}

int cmd_mle(const CLI::App& sub, const Params& p, std::ostream& out) {
  const Output o(sub, p);
  const auto problem = load_problem(p);
  const auto model = outcome_model(gammas_of(segment_gaps(analyze_segments(problem))));
  auto cfg = experiment_config(p);
  MleSampler sampler;
  if (p.sampler == "truncated") {
    sampler = MleSampler::truncated;
  } else if (p.sampler == "laplace") {
    sampler = MleSampler::laplace;
  } else {
    throw InputError(fmt::format("unknown sampler '{}' (expected truncated or laplace)", p.sampler));
  }
  const auto res = mle_experiment(model, p.l, cfg, sampler);
  // single-shot baseline for the same change-point law
  double single = model.success();
  if (cfg.true_change_point) {
    if (*cfg.true_change_point > model.n()) throw InputError("--true-n out of range");
    const auto t = static_cast<Eigen::Index>(*cfg.true_change_point);
    single = model.probs(t, t);
  }
  if (o.csv()) {
    std::string body = o.csv_header() + "L,runs,hits,rate,lower,upper,single_shot\n";
    body += fmt::format("{},{},{},{},{},{},{}\n", p.l, res.runs, res.hits, fmt_real(res.rate),
                        fmt_real(res.interval.lower), fmt_real(res.interval.upper), fmt_real(single));
    o.write(body, out);
  } else {
    o.write_json({{"L", p.l},
                  {"runs", res.runs},
                  {"hits", res.hits},
                  {"rate", res.rate},
                  {"interval", {res.interval.lower, res.interval.upper}},
                  {"single_shot", single}},
                 out);
  }
  return kOk;
}

int cmd_hamiltonian(const CLI::App& sub, const Params& p, std::ostream& out) {
  const Output o(sub, p);
  const auto pair = load_hamiltonian(p);
  const auto cand = candidate_times(p, pair);
  std::vector<std::size_t> r_list;
  for (const auto& s : split(p.r_list, ',')) {
    const auto r = parse_number<std::size_t>(s, "--r-list");
    if (r == 0) throw InputError("--r-list entries must be positive");
    r_list.push_back(r);
  }
  if (r_list.empty()) throw InputError("--r-list is empty");
  const auto rep = convergence_report(pair, cand, r_list);
  if (o.csv()) {
    std::string body = o.csv_header() + fmt::format("# success = {}\n", fmt_real(rep.success));
    body += "R,k,gamma_hat,gamma,discrepancy\n";
    for (const auto& row : rep.rows) {
      body += fmt::format("{},{},{},{},{}\n", row.r, row.k, fmt_real(row.gamma_hat), fmt_real(row.gamma),
                          fmt_real(row.discrepancy));
    }
    o.write(body, out);
  } else {
    json rows = json::array();
    for (const auto& row : rep.rows) {
      rows.push_back({{"R", row.r}, {"k", row.k}, {"gamma_hat", row.gamma_hat}, {"gamma", row.gamma}, {"discrepancy", row.discrepancy}});
    }
    o.write_json({{"success", rep.success},
                  {"r_list", rep.r_list},
                  {"success_hat", rep.success_hat},
                  {"max_discrepancy", rep.max_discrepancy},
                  {"rows", rows}},
                 out);
  }
  return kOk;
}

spdlog::level::level_enum log_level(std::ostream& err) {
  const char* env = std::getenv("QCP_LOG_LEVEL");
  if (env == nullptr || *env == '\0') return spdlog::level::warn;
  const std::string v = env;
  if (v == "error") return spdlog::level::err;
  if (v == "warn") return spdlog::level::warn;
  if (v == "info") return spdlog::level::info;
  if (v == "debug") return spdlog::level::debug;
  err << "QCP_LOG_LEVEL: unknown level '" << v << "', using warn\n";
  return spdlog::level::warn;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("qcp", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(log_level(err));
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> prev;
    ~Restore() { spdlog::set_default_logger(prev); }
  } restore{previous};

  CLI::App app{"Quantum change-point detection toolkit", "qcp"};
  app.set_config("--config", "", "INI file with one [command] section; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();
  Params p;

  auto add_pair = [&](CLI::App* s) {
    s->add_option("--u0", p.u0, "Matrix file for U0")->capture_default_str();
    s->add_option("--u1", p.u1, "Matrix file for U1")->capture_default_str();
  };
  auto add_problem = [&](CLI::App* s) {
    add_pair(s);
    s->add_option("--n", p.n, "Number of segments N")->capture_default_str();
    s->add_option("--r", p.r, "Steps per segment R")->capture_default_str();
  };
  auto add_output = [&](CLI::App* s, const char* fmt_default) {
    p.format = fmt_default;
    s->add_option("--out", p.out, "Output file (stdout when empty)")->capture_default_str();
    s->add_option("--format", p.format, "csv or json")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));
  };
  auto add_experiment = [&](CLI::App* s) {
    s->add_option("--trials", p.trials, "Number of trials")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--seed", p.seed, "RNG seed")->capture_default_str();
    s->add_option("--true-n", p.true_n, "Fixed change point (-1 draws it uniformly)")->capture_default_str();
  };

  auto* gamma = app.add_subcommand("gamma", "Spectral gap of a unitary pair or Hamiltonian intervals");
  add_pair(gamma);
  gamma->add_option("--hamiltonian", p.hamiltonian, "Hamiltonian pair file")->capture_default_str();
  gamma->add_option("--n", p.n, "Equal intervals for --hamiltonian")->capture_default_str();
  gamma->add_option("--candidates", p.candidates, "Comma-separated candidate times")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "Formula versus separable baseline for N = 1..N_max");
  add_pair(compare);
  compare->add_option("--n-max", p.n_max, "Largest N")->capture_default_str();

  auto* certify = app.add_subcommand("certify", "Dual certificate and sandwich check");
  add_problem(certify);
  certify->add_option("--y-file", p.y_file, "Per-segment Y matrices to check instead of solving")->capture_default_str();
  certify->add_option("--save-y", p.save_y, "Write the solved per-segment Y matrices")->capture_default_str();
  certify->add_option("--max-dim", p.max_dim, "Largest certificate dimension")->capture_default_str();

  auto* strategy = app.add_subcommand("strategy", "Optimal strategy description");
  add_problem(strategy);

  auto* model = app.add_subcommand("model", "Outcome model p(m|n)");
  add_problem(model);

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo experiment");
  add_problem(simulate);
  add_experiment(simulate);
  simulate->add_option("--mode", p.mode, "analytic or born")->capture_default_str()->check(CLI::IsMember({"analytic", "born"}));
  simulate->add_option("--window", p.window, "Known range n0,n1 for the clamped estimator")->capture_default_str();

  auto* mle = app.add_subcommand("mle", "Median estimator over L repetitions");
  add_problem(mle);
  add_experiment(mle);
  mle->add_option("--L", p.l, "Repetitions per run")->capture_default_str()->check(CLI::PositiveNumber);
  mle->add_option("--sampler", p.sampler, "truncated or laplace")->capture_default_str()->check(CLI::IsMember({"truncated", "laplace"}));

  auto* hamiltonian = app.add_subcommand("hamiltonian", "Discretization convergence for a Hamiltonian pair");
  hamiltonian->add_option("--hamiltonian", p.hamiltonian, "Hamiltonian pair file")->capture_default_str();
  hamiltonian->add_option("--n", p.n, "Equal intervals")->capture_default_str();
  hamiltonian->add_option("--candidates", p.candidates, "Comma-separated candidate times")->capture_default_str();
  hamiltonian->add_option("--r-list", p.r_list, "Comma-separated sub-step counts")->capture_default_str();

  const std::pair<CLI::App*, const char*> outputs[] = {{gamma, "json"},    {compare, "csv"}, {certify, "json"},
                                                       {strategy, "json"}, {model, "csv"},   {simulate, "csv"},
                                                       {mle, "csv"},       {hamiltonian, "csv"}};
  for (const auto& [s, f] : outputs) add_output(s, f);
  p.format.clear();

  std::vector<std::string> argv_store{"qcp"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    for (const auto& [s, f] : outputs) {
      if (!s->parsed()) continue;
      if (p.format.empty()) p.format = f;
      if (s == gamma) return cmd_gamma(*s, p, out);
      if (s == compare) return cmd_compare(*s, p, out);
      if (s == certify) return cmd_certify(*s, p, out);
      if (s == strategy) return cmd_strategy(*s, p, out);
      if (s == model) return cmd_model(*s, p, out);
      if (s == simulate) return cmd_simulate(*s, p, out);
      if (s == mle) return cmd_mle(*s, p, out);
      if (s == hamiltonian) return cmd_hamiltonian(*s, p, out);
    }
  } catch (const CertificationFailed& e) {
    err << "qcp: " << e.what() << "\n";
    return kCertificationFailed;
  } catch (const SplitRequired& e) {
    err << "qcp: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    err << "qcp: numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const InputError& e) {
    err << "qcp: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    err << "qcp: " << e.what() << "\n";
    return kNumericalError;
  }
  return kInputError;
}

}  // namespace qcp::cli
