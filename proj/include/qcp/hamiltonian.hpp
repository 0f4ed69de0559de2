#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcp/linalg.hpp"
#include "qcp/strategy.hpp"

namespace qcp {

enum class HamiltonianKind { table, constant, linear_chirp, sinusoidal };

std::string to_string(HamiltonianKind kind);
HamiltonianKind hamiltonian_kind_from_string(const std::string& name);

/// Qubit field h(t) = offset + slope t + amplitude cos(frequency t + phase); H(t) = h(t) . sigma.
struct FieldParams {
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  std::array<double, 3> slope{0.0, 0.0, 0.0};
  std::array<double, 3> amplitude{0.0, 0.0, 0.0};
  double frequency = 0.0;
  double phase = 0.0;
};

struct HamiltonianSpec {
  std::size_t dim = 2;
  HamiltonianKind kind = HamiltonianKind::constant;
  // table: samples[i] acts on [times[i], times[i+1]); a trailing extra sample acts at times.back()
  std::vector<double> times;
  std::vector<ComplexMatrix> samples;
  FieldParams field;
  double t_start = 0.0;
  double t_end = 1.0;

  static HamiltonianSpec table(std::vector<double> times, std::vector<ComplexMatrix> samples);
  static HamiltonianSpec parametric(HamiltonianKind kind, const FieldParams& field, double t_start,
                                    double t_end);

  void validate() const;
  ComplexMatrix at(double t) const;
  /// Interior table breakpoints.
  std::vector<double> breakpoints() const;
};

struct HamiltonianPair {
  HamiltonianSpec h0;
  HamiltonianSpec h1;

  void validate() const;
  double t_start() const;
  double t_end() const;
};

/// tau_0 < ... < tau_{NR} with tau_{kR} = t_k.
struct SegmentGrid {
  std::vector<double> tau;
  std::size_t r = 1;

  static SegmentGrid uniform(std::span<const double> candidates, std::size_t r);
  std::size_t n() const { return (tau.size() - 1) / r; }
};

/// Midpoint-exponential unitaries exp(-i H_b(t_mid) dtau) for every sub-step.
ChangePointProblem discretize(const HamiltonianPair& pair, const SegmentGrid& grid);

/// mu_max - mu_min of H1(t) - H0(t).
double spectral_spread(const HamiltonianPair& pair, double t);

/// Adaptive Simpson integral of the spectral spread, split at table breakpoints and
/// at detected eigenvalue-crossing kinks.
double integrate_spread(const HamiltonianPair& pair, double t_lo, double t_hi, double tol = 1e-8);

/// sin(min(theta, pi) / 2)
double delta_clamp(double theta);

double gamma_hamiltonian(const HamiltonianPair& pair, double t_lo, double t_hi);

std::vector<double> hamiltonian_gammas(const HamiltonianPair& pair, std::span<const double> candidates);

double hamiltonian_success_probability(const HamiltonianPair& pair,
                                       std::span<const double> candidates);

struct ConvergenceRow {
  std::size_t r = 0;
  std::size_t k = 0;
  double gamma_hat = 0.0;
  double gamma = 0.0;
  double discrepancy = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<std::size_t> r_list;
  std::vector<double> success_hat;    // per R, from the discretized gammas
  std::vector<double> max_discrepancy;  // per R
  double success = 0.0;               // analytic
};

ConvergenceReport convergence_report(const HamiltonianPair& pair, std::span<const double> candidates,
                                     std::span<const std::size_t> r_list);

/// Least-squares slope of -log(error) against log(R).
double empirical_order(std::span<const std::size_t> r_list, std::span<const double> errors);

/// Table file {"dim", "times", "H0": [...], "H1": [...]} or parametric
/// {"t_start", "t_end", "H0": {"kind": ..., "offset": [...], ...}, "H1": {...}}.
HamiltonianPair hamiltonian_pair_from_json(const nlohmann::json& j);
nlohmann::json hamiltonian_pair_to_json(const HamiltonianPair& pair);

}  // namespace qcp
