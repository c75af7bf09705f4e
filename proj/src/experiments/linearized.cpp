#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "common.hpp"
#include "lowmach/experiments.hpp"
#include "lowmach/models.hpp"

namespace lowmach {
namespace {

Field unit_random(std::uint64_t seed, const GridPtr& grid, int band) {
  const Field f = random_band_limited_field(seed, grid, band, 0.0, 1.0);
  return f * (1.0 / f.max_abs());
}

double max_gradient(const Field& f) {
  const auto g = grad(f);
  std::vector<std::vector<double>> v;
  for (const auto& c : g) v.push_back(c.values());
  double m = 0.0;
  for (std::size_t i = 0; i < v[0].size(); ++i) {
    double s = 0.0;
    for (const auto& c : v) s += c[i] * c[i];
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

struct CoercivityFit {
  double k1 = std::numeric_limits<double>::infinity();
  double worst_m = 0.0;
  double worst_M = 0.0;
};

// Smallest K1 such that
//   -<zeta Lap u + eta grad div u, u> >= K1 m ||grad u||^2 - (M^2 / m) ||u||^2
// over random samples, with m = inf(zeta, zeta + eta), M = |grad zeta|_inf + |grad eta|_inf.
CoercivityFit fit_viscous_coercivity(const GridPtr& grid, std::uint64_t seed, int samples) {
  CoercivityFit fit;
  const auto seeds = detail::sub_seeds(seed, 4 * static_cast<std::size_t>(samples));
  std::mt19937_64 gen(seed ^ 0x5bd1e995ULL);
  std::uniform_real_distribution<double> shift(-0.4, 1.0);
  for (int s = 0; s < samples; ++s) {
    const auto k = static_cast<std::size_t>(4 * s);
    const Field zeta = Field::constant(grid, 1.0) + 0.3 * unit_random(seeds[k], grid, 3);
    const Field eta = Field::constant(grid, shift(gen)) + 0.2 * unit_random(seeds[k + 1], grid, 3);
    std::vector<Field> u;
    for (int j = 0; j < grid->dim(); ++j)
      u.push_back(random_band_limited_field(seeds[k + 2] + static_cast<std::uint64_t>(j), grid, 6, 0.0, 1.0));
    const auto zv = zeta.values();
    const auto sv = (zeta + eta).values();
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < zv.size(); ++i) m = std::min({m, zv[i], sv[i]});
    if (!(m > 0.0)) continue;
    const double big_m = max_gradient(zeta) + max_gradient(eta);
    double grad_u2 = 0.0;
    for (const auto& c : u) {
      const auto g = grad(c);
      grad_u2 += inner(g, g);
    }
    const double u2 = inner(u, u);
    const double lhs = viscous_form(zeta, eta, u);
    const double k1 = (lhs + big_m * big_m / m * u2) / (m * grad_u2);
    if (k1 < fit.k1) {
      fit.k1 = k1;
      fit.worst_m = m;
      fit.worst_M = big_m;
    }
  }
  return fit;
}

}  // namespace

ExperimentReport run_linearized_probe(const LinearizedConfig& config) {
  if (config.eps_list.empty()) throw std::invalid_argument("eps list is empty");
  detail::Stopwatch clock;
  ExperimentReport report;
  report.name = "linearized-probe";
  report.columns = {"eps", "mu", "kappa", "growth", "dt", "steps"};
  const GridPtr grid = make_grid(config.dim, config.points);
  const CoefficientSet c = perfect_gas(config.gas);
  const auto seeds = detail::sub_seeds(config.seed, static_cast<std::size_t>(config.dim) + 3);

  const Field theta_bar = config.coefficient_amplitude * unit_random(seeds[0], grid, config.band);
  std::vector<Field> vbar;
  for (int j = 0; j < config.dim; ++j)
    vbar.push_back(config.coefficient_amplitude * unit_random(seeds[static_cast<std::size_t>(j) + 1], grid, config.band));
  const FrozenCoefficients frozen = freeze_coefficients(theta_bar, vbar, c);
  const FlowState raw = detail::random_flow_state(grid, seeds.back(), config.band);

  std::vector<double> growth;
  for (double eps : config.eps_list) {
    const ParamTriple a(eps, config.mu, config.kappa);
    const FlowState u0 = detail::normalized(raw, a, 0.0, 1.0);
    const double n0 = initial_norm(u0, a, 0.0);
    const SplitOperator split = build_linearized_split(grid, frozen, a);
    StepperConfig sc;
    sc.t_end = config.t_end;
    sc.dt = choose_dt(*grid, max_speed(vbar), linearized_soft_rate(frozen, a), 0.5, 0.01);
    CompositeNormAccumulator acc(a, 0.0);
    const Trajectory tr = integrate(split, u0.pack(), sc,
                                    {[&](double t, const Bundle& u) { acc.record(t, FlowState::unpack(u)); }});
    const double g = n0 > 0.0 ? acc.value() / n0 : 1.0;
    growth.push_back(g);
    report.rows.push_back({eps, config.mu, config.kappa, g, tr.dt, static_cast<double>(tr.steps)});
  }
  const double gmax = *std::max_element(growth.begin(), growth.end());
  const double gmin = *std::min_element(growth.begin(), growth.end());
  const double spread = gmin > 0.0 ? gmax / gmin : std::numeric_limits<double>::infinity();
  report.add_check("uniform-growth", spread <= config.growth_ratio, spread, config.growth_ratio,
                   "max/min over eps of the growth factor of the composite norm");

  const CoercivityFit fit = fit_viscous_coercivity(grid, config.seed + 1, config.coercivity_samples);
  std::ostringstream detail_text;
  detail_text << "fitted K1 with K2 = 1 over " << config.coercivity_samples << " samples; worst at m = " << fit.worst_m
              << ", M = " << fit.worst_M;
  report.add_check("viscous-coercivity", fit.k1 >= config.coercivity_k1_min, fit.k1, config.coercivity_k1_min,
                   detail_text.str());
  report.metrics = {{"growth_max", gmax}, {"growth_min", gmin}, {"growth_spread", spread}, {"coercivity_K1", fit.k1}};
  Plot plot{"linearized_growth", "Growth factor of the composite norm", "eps", "growth", true, false, {}};
  plot.series.push_back({"growth", config.eps_list, growth});
  report.plots.push_back(std::move(plot));
  report.runtime_seconds = clock.seconds();
  return report;
}

}  // namespace lowmach
