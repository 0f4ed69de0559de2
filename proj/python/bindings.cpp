#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qcp/certificate.hpp"
#include "qcp/errors.hpp"
#include "qcp/hamiltonian.hpp"
#include "qcp/sdp.hpp"
#include "qcp/simulator.hpp"
#include "qcp/spectral.hpp"
#include "qcp/strategy.hpp"

namespace py = pybind11;

namespace {

py::dict gap_dict(const qcp::SpectralGap& g) {
  py::dict d;
  d["lambda0"] = g.lambda0;
  d["lambda1"] = g.lambda1;
  d["gamma"] = g.gamma;
  d["zeta"] = g.zeta;
  d["omega"] = g.omega;
  d["origin_enclosed"] = g.origin_enclosed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quantum change-point detection core";

  py::register_exception<qcp::InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<qcp::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<qcp::SplitRequired>(m, "SplitRequired", PyExc_ValueError);

  m.def("gap", [](const qcp::ComplexMatrix& u0, const qcp::ComplexMatrix& u1) { return gap_dict(qcp::gap_single(u0, u1)); },
        py::arg("u0"), py::arg("u1"));

  m.def("max_success_probability",
        [](const std::vector<double>& gammas) { return qcp::max_success_probability(gammas); }, py::arg("gammas"));

  m.def("outcome_model", [](const std::vector<double>& gammas) { return qcp::outcome_model(gammas).probs; },
        py::arg("gammas"));

  m.def(
      "strategy",
      [](const qcp::ComplexMatrix& u0, const qcp::ComplexMatrix& u1, std::size_t n, std::size_t r) {
        const auto s = qcp::build_strategy(qcp::ChangePointProblem::repeated(u0, u1, n, r));
        py::dict d;
        d["success"] = s.success();
        d["born"] = s.born;
        d["model"] = s.model.probs;
        d["input_state"] = s.input_state;
        d["effective_space"] = s.effective_space;
        return d;
      },
      py::arg("u0"), py::arg("u1"), py::arg("n"), py::arg("r") = 1);

  m.def(
      "separable_baseline",
      [](const qcp::ComplexMatrix& u0, const qcp::ComplexMatrix& u1, std::size_t n) {
        qcp::sdp::Options opt;
        opt.max_total_dim = std::max<std::size_t>(opt.max_total_dim, (n + 1) * (n + 1));
        return qcp::sdp::separable_baseline(qcp::gap_single(u0, u1), n, opt);
      },
      py::arg("u0"), py::arg("u1"), py::arg("n"));

  m.def(
      "min_error_discrimination",
      [](const qcp::ComplexMatrix& gram, const std::vector<double>& priors) {
        return qcp::sdp::min_error_discrimination(gram, priors);
      },
      py::arg("gram"), py::arg("priors"));

  m.def(
      "certify",
      [](const qcp::ComplexMatrix& u0, const qcp::ComplexMatrix& u1, std::size_t n, std::size_t r) {
        const auto c = qcp::build_certificate(qcp::ChangePointProblem::repeated(u0, u1, n, r));
        py::dict d;
        d["eta"] = c.eta;
        d["q"] = c.q;
        d["cone_residual"] = c.cone.residual;
        d["min_dominance"] = c.min_dominance;
        d["verdict"] = c.verdict;
        return d;
      },
      py::arg("u0"), py::arg("u1"), py::arg("n"), py::arg("r") = 1);

  m.def(
      "simulate",
      [](const std::vector<double>& gammas, std::size_t trials, std::uint64_t seed) {
        qcp::ExperimentConfig cfg;
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.keep_trials = false;
        const auto e = qcp::run_experiment(qcp::outcome_model(gammas), cfg);
        return py::make_tuple(e.rate, e.interval.lower, e.interval.upper);
      },
      py::arg("gammas"), py::arg("trials"), py::arg("seed") = 0);

  m.def(
      "mle_estimate",
      [](const std::vector<long long>& outcomes) {
        const auto e = qcp::mle_estimate(outcomes);
        return py::make_tuple(e.lower, e.upper, e.canonical);
      },
      py::arg("outcomes"));

  m.def(
      "hamiltonian_success_probability",
      [](const std::string& path_json, const std::vector<double>& candidates) {
        const auto pair = qcp::hamiltonian_pair_from_json(nlohmann::json::parse(path_json));
        return qcp::hamiltonian_success_probability(pair, candidates);
      },
      py::arg("spec_json"), py::arg("candidates"));
}
