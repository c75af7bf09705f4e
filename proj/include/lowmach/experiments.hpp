#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lowmach/gas.hpp"
#include "lowmach/integrator.hpp"

namespace lowmach {

/// One pass/fail property measured by an experiment.
struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// A named curve family for an SVG line plot.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string file_stem;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

struct ExperimentReport {
  std::string name;
  std::vector<CheckResult> checks;
  /// Main table, written as CSV.
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  /// Scalar results for the JSON summary.
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<Plot> plots;
  /// Wall-clock timings; kept out of the CSV so that tables are reproducible.
  std::vector<std::pair<std::string, double>> timings;
  double runtime_seconds = 0.0;

  bool passed() const;
  CheckResult& add_check(std::string name, bool passed, double value, double threshold,
                         std::string detail = {});
  const CheckResult* find_check(const std::string& name) const;
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------

struct OperatorSuiteConfig {
  std::uint64_t seed = 1;
  int dim = 2;
  int points = 64;
  int samples = 100;
};

/// Mollifier identities, the Bessel-multiplier symbol bounds, the product and
/// commutator estimates with fitted constants, and the Friedrichs commutator
/// rate in h.
ExperimentReport run_operator_suite(const OperatorSuiteConfig& config);

struct Example42Config {
  int dim = 2;
  int points = 32;
  double beta = 2.0;
  std::vector<double> eps_list{0.1, 0.01};
  double t_end = 1.0;
  std::uint64_t seed = 1;
  int band = 3;
  /// Step as a fraction of 1 / (largest eigenvalue magnitude of the symbol).
  double step_fraction = 0.015;
  /// Allowed max/min ratio of the bounded quantities across eps.
  double uniformity_ratio = 1.5;
};

ExperimentReport run_example42(const Example42Config& config);

struct SweepConfig {
  int dim = 2;
  int points = 64;
  std::vector<double> eps_list{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> mu_list{0.0, 1.0};
  std::vector<double> kappa_list{0.0, 1.0};
  double s = 4.0;
  double t_end = 0.25;
  /// Initial-data norm imposed for every parameter triple.
  double m0 = 1.0;
  std::uint64_t seed = 1;
  int band = 2;
  Scheme scheme = Scheme::erk4_exponential;
  double safety = 0.5;
  double dt_max = 0.01;
  double ratio_threshold = 3.0;
  PerfectGas gas;
};

ExperimentReport run_uniform_sweep(const SweepConfig& config);

struct LimitConfig {
  int dim = 2;
  int points = 64;
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  double mu = 1.0;
  double kappa = 1.0;
  double t_end = 0.5;
  double dt = 0.0025;
  std::uint64_t seed = 1;
  int band = 3;
  double theta_amplitude = 0.1;
  double velocity_amplitude = 0.1;
  /// Sobolev order of the local norms.
  double s_prime = 1.0;
  /// Radius of the smooth window, as a fraction of the box length.
  double window_fraction = 0.35;
  double contraction = 0.75;
  PerfectGas gas;
};

ExperimentReport run_limit_convergence(const LimitConfig& config);

struct AcousticConfig {
  std::vector<int> dims{1, 2};
  int points_1d = 256;
  int points_2d = 256;
  double box_length = 16.0;
  double window_radius = 1.0;
  double pulse_radius = 0.8;
  /// a = 1 + bump_amplitude * bump near the centre; b = 1.
  double bump_amplitude = 0.5;
  std::vector<double> eps_list{0.2, 0.1, 0.05};
  /// Final time in units of the smallest eps.
  double t_end_over_eps = 7.0;
  double decay_threshold = 0.2;
  double safety = 0.5;
  int samples = 50;
};

ExperimentReport run_acoustic_decay(const AcousticConfig& config);

struct LinearizedConfig {
  int dim = 2;
  int points = 32;
  std::vector<double> eps_list{0.5, 0.25, 0.125, 0.0625};
  double mu = 1.0;
  double kappa = 1.0;
  double t_end = 0.25;
  std::uint64_t seed = 1;
  int band = 3;
  double coefficient_amplitude = 0.3;
  double growth_ratio = 2.0;
  int coercivity_samples = 200;
  double coercivity_k1_min = 0.2;
  PerfectGas gas;
};

ExperimentReport run_linearized_probe(const LinearizedConfig& config);

struct SimulateConfig {
  int dim = 2;
  int points = 64;
  double eps = 0.1;
  double mu = 1.0;
  double kappa = 1.0;
  double s = 4.0;
  double t_end = 0.25;
  double m0 = 1.0;
  std::uint64_t seed = 1;
  int band = 2;
  Scheme scheme = Scheme::erk4_exponential;
  double safety = 0.5;
  double dt_max = 0.01;
  PerfectGas gas;
};

/// Single run of the fluctuation system with a norm time series.
ExperimentReport run_simulation(const SimulateConfig& config);

ExperimentReport run_validate_model(const PerfectGas& gas, const SampleBox& box, int samples);

}  // namespace lowmach
