#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "common.hpp"
#include "lowmach/experiments.hpp"
#include "lowmach/models.hpp"

namespace lowmach {
namespace {

double distance_to_centre(std::span<const double> x, double length) {
  double r2 = 0.0;
  for (double xi : x) r2 += (xi - 0.5 * length) * (xi - 0.5 * length);
  return std::sqrt(r2);
}

// Integral over the ball |x - x0| < R of (eps du/dt)^2 + |grad u|^2.
double window_energy(const WaveState& s, double eps, const std::vector<unsigned char>& inside, double cell) {
  const auto w = s.w.values();
  const auto du = grad(s.u);
  std::vector<std::vector<double>> dv;
  for (const auto& f : du) dv.push_back(f.values());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!inside[i]) continue;
    double e = eps * eps * w[i] * w[i];
    for (const auto& g : dv) e += g[i] * g[i];
    sum += e;
  }
  return sum * cell;
}

}  // namespace

ExperimentReport run_acoustic_decay(const AcousticConfig& config) {
  if (config.eps_list.empty()) throw std::invalid_argument("eps list is empty");
  if (!(config.bump_amplitude > -1.0)) throw std::invalid_argument("bump amplitude must exceed -1");
  detail::Stopwatch clock;
  ExperimentReport report;
  report.name = "acoustic-decay";
  report.columns = {"dim", "eps", "W0", "WT", "ratio", "steps", "dt"};
  const double eps_min = *std::min_element(config.eps_list.begin(), config.eps_list.end());
  const double t_end = config.t_end_over_eps * eps_min;
  // The fastest waves travel at 1/(eps sqrt(min a)); a >= min(1, 1 + amplitude).
  const double a_min = std::min(1.0, 1.0 + config.bump_amplitude);
  const double transit = config.box_length * eps_min * std::sqrt(a_min);
  if (!(t_end < 0.5 * transit))
    throw std::invalid_argument("final time exceeds half the box transit time; waves would wrap around");
  if (!(config.pulse_radius > 0.0 && config.pulse_radius <= 0.125 * config.box_length))
    throw std::invalid_argument("pulse must lie in the central quarter of the box");

  for (int dim : config.dims) {
    const int n = dim == 1 ? config.points_1d : config.points_2d;
    if (dim < 1 || dim > 2) throw std::invalid_argument("acoustic decay runs in 1 or 2 dimensions");
    const GridPtr grid = make_grid(dim, n, config.box_length);
    const double L = config.box_length;
    const Field a = Field::from_function(grid, [&](std::span<const double> x) {
      return 1.0 + config.bump_amplitude * cutoff_profile(distance_to_centre(x, L) / config.window_radius);
    });
    const Field b = Field::constant(grid, 1.0);
    const Field pulse = Field::from_function(grid, [&](std::span<const double> x) {
      return cutoff_profile(2.0 * distance_to_centre(x, L) / config.pulse_radius);
    });
    std::vector<unsigned char> inside(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
      double r2 = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double x = grid->coordinate(i, j) - 0.5 * L;
        r2 += x * x;
      }
      inside[i] = std::sqrt(r2) < config.window_radius;
    }
    const double cell = std::pow(grid->spacing(), dim);
    const WaveCoefficients coef = WaveCoefficients::stationary(a, b, 1.0, 1.0);

    std::vector<double> ratios;
    Plot plot{"acoustic_decay_" + std::to_string(dim) + "d", "Windowed wave energy (d = " + std::to_string(dim) + ")",
              "t", "W(t) / W(0)", false, true, {}};
    for (double eps : config.eps_list) {
      const SplitOperator split = build_wave_split(grid, eps, coef);
      StepperConfig sc;
      sc.t_end = t_end;
      sc.dt = choose_dt(*grid, 0.0, wave_soft_rate(*grid, eps, coef), config.safety,
                        t_end / std::max(1, config.samples));
      std::vector<double> ts, ws;
      Trajectory tr;
      bool blew_up = false;
      try {
        tr = integrate(split, WaveState{pulse, Field(grid)}.pack(), sc,
                       {[&](double t, const Bundle& u) {
                         ts.push_back(t);
                         ws.push_back(window_energy(WaveState::unpack(u), eps, inside, cell));
                       }});
      } catch (const BlowUpError&) {
        blew_up = true;
      }
      const double w0 = ws.front();
      const double ratio = blew_up ? std::numeric_limits<double>::infinity() : (w0 > 0.0 ? ws.back() / w0 : 0.0);
      ratios.push_back(ratio);
      report.rows.push_back({static_cast<double>(dim), eps, w0, blew_up ? ratio : ws.back(), ratio,
                             static_cast<double>(tr.steps), tr.dt});
      std::ostringstream label;
      label << "eps = " << eps;
      PlotSeries s{label.str(), {}, {}};
      for (std::size_t i = 0; i < ts.size(); ++i) {
        s.x.push_back(ts[i]);
        s.y.push_back(w0 > 0.0 ? std::max(ws[i] / w0, 1e-16) : 1.0);
      }
      plot.series.push_back(std::move(s));
    }
    // Order eps from coarse to fine to state the monotonicity.
    std::vector<std::pair<double, double>> by_eps;
    for (std::size_t i = 0; i < ratios.size(); ++i) by_eps.emplace_back(config.eps_list[i], ratios[i]);
    std::sort(by_eps.begin(), by_eps.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    bool monotone = std::isfinite(by_eps.front().second);
    for (std::size_t i = 1; i < by_eps.size(); ++i) monotone = monotone && by_eps[i].second <= by_eps[i - 1].second;
    const std::string tag = std::to_string(dim) + "d";
    report.add_check("decay-" + tag, by_eps.back().second <= config.decay_threshold, by_eps.back().second,
                     config.decay_threshold, "W(T)/W(0) at the smallest eps");
    report.add_check("decay-monotone-" + tag, monotone, by_eps.back().second, 0.0,
                     "W(T)/W(0) is nonincreasing as eps decreases");
    report.metrics.emplace_back("ratio_finest_" + tag, by_eps.back().second);
    report.plots.push_back(std::move(plot));
  }
  report.metrics.emplace_back("t_end", t_end);
  report.runtime_seconds = clock.seconds();
  return report;
}

}  // namespace lowmach
