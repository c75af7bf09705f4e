#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "common.hpp"
#include "lowmach/experiments.hpp"
#include "lowmach/models.hpp"

namespace lowmach {
namespace {

void require_unit_interval(const std::vector<double>& xs, bool open_at_zero, const char* what) {
  if (xs.empty()) throw std::invalid_argument(std::string(what) + " list is empty");
  for (double x : xs)
    if (!((open_at_zero ? x > 0.0 : x >= 0.0) && x <= 1.0))
      throw std::invalid_argument(std::string(what) + " values must lie in " + (open_at_zero ? "(0, 1]" : "[0, 1]"));
}

struct RunResult {
  double composite = 0.0;
  double split_high = 0.0;
  double split_low = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  bool blow_up = false;
  double runtime = 0.0;
  std::vector<std::vector<double>> series;  // t, norms..., composite, split_low, split_high
};

// Integrates the fluctuation system and accumulates the composite norm of the
// state and of its low and high frequency parts.
RunResult run_main(const GridPtr& grid, const FlowState& u0, const ParamTriple& a, const CoefficientSet& c,
                   double s, Scheme scheme, double safety, double dt_max, double t_end, bool keep_series) {
  detail::Stopwatch clock;
  RunResult r;
  const SplitOperator split = build_main_split(grid, a, c);
  StepperConfig sc;
  sc.scheme = scheme;
  sc.t_end = t_end;
  sc.dt = choose_dt(*grid, max_speed(u0.v), main_soft_rate(u0, a, c), safety, dt_max);
  const double h = a.eps() * a.nu();
  CompositeNormAccumulator full(a, s), low(a, s), high(a, s);
  auto monitor = [&](double t, const Bundle& b) {
    const FlowState u = FlowState::unpack(b);
    full.record(t, u);
    if (h > 0.0) {
      const FlowState lo = mollify(u, h);
      low.record(t, lo);
      high.record(t, FlowState::unpack(add(b, lowmach::scaled(lo.pack(), -1.0))));
    } else {
      low.record(t, u);
      high.record(t, FlowState::zero(grid));
    }
    if (keep_series) {
      const NormReport nr = frequency_split_report(u, a, s);
      std::vector<double> row{t};
      for (const auto& [name, value] : nr.h_sigma) row.push_back(value);
      row.push_back(full.value());
      row.push_back(low.value());
      row.push_back(high.value());
      r.series.push_back(std::move(row));
    }
  };
  try {
    const Trajectory tr = integrate(split, u0.pack(), sc, {monitor});
    r.dt = tr.dt;
    r.steps = tr.steps;
  } catch (const BlowUpError&) {
    r.blow_up = true;
  }
  r.composite = full.value();
  r.split_low = low.value();
  r.split_high = high.value();
  r.runtime = clock.seconds();
  return r;
}

std::string label_of(double mu, double kappa) {
  std::ostringstream os;
  os << "mu = " << mu << ", kappa = " << kappa;
  return os.str();
}

}  // namespace

ExperimentReport run_uniform_sweep(const SweepConfig& config) {
  require_unit_interval(config.eps_list, true, "eps");
  require_unit_interval(config.mu_list, false, "mu");
  require_unit_interval(config.kappa_list, false, "kappa");
  if (!(config.m0 >= 0.0)) throw std::invalid_argument("m0 must be nonnegative");
  detail::Stopwatch clock;
  ExperimentReport report;
  report.name = "sweep";
  report.columns = {"eps", "mu", "kappa", "composite", "split_high", "split_low", "blow_up", "steps", "dt"};
  const GridPtr grid = make_grid(config.dim, config.points);
  const CoefficientSet c = perfect_gas(config.gas);
  const FlowState raw = detail::random_flow_state(grid, config.seed, config.band);

  Plot plot{"sweep_composite", "Composite norm at T", "eps", "composite norm H^s_a(T)", true, false, {}};
  double vmax = 0.0;
  double vmin = std::numeric_limits<double>::infinity();
  int blow_ups = 0;
  for (double mu : config.mu_list)
    for (double kappa : config.kappa_list) {
      PlotSeries series{label_of(mu, kappa), {}, {}};
      for (double eps : config.eps_list) {
        const ParamTriple a(eps, mu, kappa);
        const FlowState u0 = detail::normalized(raw, a, config.s, config.m0);
        const RunResult r = run_main(grid, u0, a, c, config.s, config.scheme, config.safety, config.dt_max,
                                     config.t_end, false);
        std::ostringstream key;
        key << "eps=" << eps << ",mu=" << mu << ",kappa=" << kappa;
        report.timings.emplace_back(key.str(), r.runtime);
        report.rows.push_back({eps, mu, kappa, r.composite, r.split_high, r.split_low,
                               r.blow_up ? 1.0 : 0.0, static_cast<double>(r.steps), r.dt});
        if (r.blow_up) {
          ++blow_ups;
          continue;
        }
        vmax = std::max(vmax, r.composite);
        vmin = std::min(vmin, r.composite);
        series.x.push_back(eps);
        series.y.push_back(r.composite);
      }
      plot.series.push_back(std::move(series));
    }
  // Rows sorted by (eps, mu, kappa) so the table does not depend on loop order.
  std::sort(report.rows.begin(), report.rows.end(), [](const auto& x, const auto& y) {
    return std::tie(x[0], x[1], x[2]) < std::tie(y[0], y[1], y[2]);
  });
  report.add_check("no-blow-up", blow_ups == 0, blow_ups, 0.0, "number of parameter triples that blew up");
  const double ratio = config.m0 == 0.0 ? 1.0 : (vmin > 0.0 ? vmax / vmin : std::numeric_limits<double>::infinity());
  report.add_check("uniform-bound", ratio <= config.ratio_threshold, ratio, config.ratio_threshold,
                   "max/min over parameter triples of the composite norm at T");
  report.metrics = {{"composite_max", vmax}, {"composite_min", vmin}, {"ratio", ratio}, {"blow_ups", blow_ups}};
  report.plots.push_back(std::move(plot));
  report.runtime_seconds = clock.seconds();
  return report;
}

ExperimentReport run_simulation(const SimulateConfig& config) {
  detail::Stopwatch clock;
  ExperimentReport report;
  report.name = "simulate";
  const ParamTriple a(config.eps, config.mu, config.kappa);
  const GridPtr grid = make_grid(config.dim, config.points);
  const CoefficientSet c = perfect_gas(config.gas);
  const FlowState u0 = detail::normalized(detail::random_flow_state(grid, config.seed, config.band), a, config.s,
                                          config.m0);
  const RunResult r = run_main(grid, u0, a, c, config.s, config.scheme, config.safety, config.dt_max,
                               config.t_end, true);
  const NormReport probe = frequency_split_report(u0, a, config.s);
  report.columns = {"t"};
  for (const auto& [name, value] : probe.h_sigma) report.columns.push_back(name);
  report.columns.insert(report.columns.end(), {"composite", "split_low", "split_high"});
  report.rows = r.series;
  report.add_check("no-blow-up", !r.blow_up, r.blow_up ? 1.0 : 0.0, 0.0, "integration reached t_end");
  report.metrics = {{"composite", r.composite}, {"split_low", r.split_low}, {"split_high", r.split_high},
                    {"dt", r.dt}, {"steps", static_cast<double>(r.steps)}};
  Plot plot{"simulate_norms", "Norm history", "t", "norm", false, false, {}};
  const std::size_t k = report.columns.size();
  for (std::size_t col = 1; col < k; ++col) {
    PlotSeries s{report.columns[col], {}, {}};
    for (const auto& row : r.series) {
      s.x.push_back(row[0]);
      s.y.push_back(row[col]);
    }
    plot.series.push_back(std::move(s));
  }
  report.plots.push_back(std::move(plot));
  report.runtime_seconds = clock.seconds();
  return report;
}

ExperimentReport run_validate_model(const PerfectGas& gas, const SampleBox& box, int samples) {
  detail::Stopwatch clock;
  ExperimentReport report;
  report.name = "validate-model";
  const ValidationReport v = validate_assumptions(perfect_gas(gas), box, samples);
  // status_code: 1 pass, 0 fail, -1 not checked
  report.columns = {"clause_index", "status_code", "worst_margin", "at_theta", "at_wp"};
  for (const auto& clause : v.clauses) {
    const bool ok = clause.status != ClauseStatus::fail;
    report.add_check(clause.clause, ok, clause.worst_margin, 0.0,
                     clause.description + " (" + to_string(clause.status) + ")");
    report.rows.push_back({static_cast<double>(report.rows.size()), clause.status == ClauseStatus::pass ? 1.0 : clause.status == ClauseStatus::fail ? 0.0 : -1.0,
                           clause.worst_margin, clause.at_theta, clause.at_wp});
  }
  report.metrics = {{"gamma", gas.gamma()}};
  report.runtime_seconds = clock.seconds();
  return report;
}

}  // namespace lowmach
