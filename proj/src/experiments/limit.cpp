#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "common.hpp"
#include "lowmach/experiments.hpp"
#include "lowmach/models.hpp"

namespace lowmach {
namespace {

// Pointwise product with the window, evaluated on the grid.
Field windowed(const Field& f, const std::vector<double>& window) {
  auto v = f.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= window[i];
  return Field::from_values(f.grid_ptr(), v);
}

double local_norm(std::span<const Field> fs, const std::vector<double>& window, double s) {
  double sum = 0.0;
  for (const Field& f : fs) {
    const double n = sobolev_norm(windowed(f, window), s);
    sum += n * n;
  }
  return std::sqrt(sum);
}

std::string format_eps(double eps) {
  std::ostringstream os;
  os << eps;
  return os.str();
}

}  // namespace

ExperimentReport run_limit_convergence(const LimitConfig& config) {
  if (config.eps_list.empty()) throw std::invalid_argument("eps list is empty");
  for (double e : config.eps_list)
    if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("eps values must lie in (0, 1]");
  if (!(config.dt > 0.0 && config.t_end > 0.0)) throw std::invalid_argument("dt and t_end must be positive");
  detail::Stopwatch clock;
  ExperimentReport report;
  report.name = "limit-convergence";
  report.columns = {"eps", "P", "D", "dt", "steps"};

  const GridPtr grid = make_grid(config.dim, config.points);
  const CoefficientSet c = perfect_gas(config.gas);
  const auto seeds = detail::sub_seeds(config.seed, static_cast<std::size_t>(config.dim) + 1);
  std::vector<Field> v_raw;
  for (int i = 0; i < config.dim; ++i)
    v_raw.push_back(config.velocity_amplitude *
                    random_band_limited_field(seeds[static_cast<std::size_t>(i)], grid, config.band, 0.0, 1.0));
  const LimitState raw{std::move(v_raw),
                       config.theta_amplitude * random_band_limited_field(seeds.back(), grid, config.band, 0.0, 1.0)};
  const LimitState u_lim0 = project_to_constraint(raw, config.kappa, c);
  const double defect0 = limit_constraint_defect(u_lim0, config.kappa, c);
  FlowState u0{Field(grid), u_lim0.v, u_lim0.theta};

  const double length = grid->length();
  const double radius = config.window_fraction * length;
  const std::vector<double> window =
      Field::from_function(grid, [&](std::span<const double> x) {
        double r2 = 0.0;
        for (double xi : x) r2 += (xi - 0.5 * length) * (xi - 0.5 * length);
        return cutoff_profile(2.0 * std::sqrt(r2) / radius);
      }).values();

  // One common step, small enough for every run.
  double dt = config.dt;
  dt = std::min(dt, choose_dt(*grid, max_speed(u_lim0.v),
                              limit_soft_rate(u_lim0, config.mu, config.kappa, c), 0.5, config.dt));
  for (double eps : config.eps_list) {
    const ParamTriple a(eps, config.mu, config.kappa);
    dt = std::min(dt, choose_dt(*grid, max_speed(u0.v), main_soft_rate(u0, a, c), 0.5, config.dt));
  }

  StepperConfig sc;
  sc.dt = dt;
  sc.t_end = config.t_end;
  std::vector<Bundle> reference;
  const SplitOperator limit_split = build_limit_split(grid, config.mu, config.kappa, c);
  const Trajectory lim = integrate(limit_split, u_lim0.pack(), sc,
                                   {[&](double, const Bundle& u) { reference.push_back(u); }});
  const double defect_end = limit_constraint_defect(LimitState::unpack(lim.final_state), config.kappa, c);

  std::vector<double> p_norms, deviations;
  for (double eps : config.eps_list) {
    detail::Stopwatch run_clock;
    const ParamTriple a(eps, config.mu, config.kappa);
    const SplitOperator split = build_main_split(grid, a, c);
    double p_integral = 0.0, last_p2 = 0.0, last_t = 0.0, deviation = 0.0;
    std::size_t index = 0;
    const Trajectory tr = integrate(split, u0.pack(), sc, {[&](double t, const Bundle& b) {
      const FlowState u = FlowState::unpack(b);
      const double pn = local_norm(std::span<const Field>(&u.p, 1), window, config.s_prime);
      const double p2 = pn * pn;
      if (index > 0) p_integral += 0.5 * (t - last_t) * (p2 + last_p2);
      last_p2 = p2;
      last_t = t;
      const LimitState ref = LimitState::unpack(reference.at(index));
      std::vector<Field> diff;
      for (std::size_t i = 0; i < u.v.size(); ++i) diff.push_back(u.v[i] - ref.v[i]);
      diff.push_back(u.theta - ref.theta);
      deviation = std::max(deviation, local_norm(diff, window, config.s_prime));
      ++index;
    }});
    const double p_norm = std::sqrt(p_integral);
    p_norms.push_back(p_norm);
    deviations.push_back(deviation);
    report.rows.push_back({eps, p_norm, deviation, tr.dt, static_cast<double>(tr.steps)});
    report.timings.emplace_back("eps=" + format_eps(eps), run_clock.seconds());
  }

  // eps_list is taken in the given order; convergence means decrease along it.
  bool p_monotone = true, d_monotone = true;
  double worst_contraction = 0.0;
  for (std::size_t i = 1; i < p_norms.size(); ++i) {
    p_monotone = p_monotone && p_norms[i] < p_norms[i - 1];
    d_monotone = d_monotone && deviations[i] < deviations[i - 1];
    const double ratio = p_norms[i] / p_norms[i - 1];
    worst_contraction = std::max(worst_contraction, ratio);
  }
  report.add_check("pressure-monotone", p_monotone, p_norms.back(), 0.0,
                   "local L2_t H^s' norm of p decreases along the eps list");
  report.add_check("pressure-contraction", worst_contraction <= config.contraction, worst_contraction,
                   config.contraction, "largest P(eps_next) / P(eps)");
  report.add_check("deviation-monotone", d_monotone, deviations.back(), 0.0,
                   "sup_t local distance to the limit solution decreases along the eps list");
  report.metrics = {{"constraint_defect_initial", defect0},
                    {"constraint_defect_final", defect_end},
                    {"dt", dt}};
  if (p_norms.size() >= 2) {
    report.metrics.emplace_back("P_slope", loglog_slope(config.eps_list, p_norms));
    report.metrics.emplace_back("D_slope", loglog_slope(config.eps_list, deviations));
  }
  Plot plot{"limit_convergence", "Convergence to the limit system", "eps", "local norm", true, true, {}};
  plot.series.push_back({"P(eps)", config.eps_list, p_norms});
  plot.series.push_back({"D(eps)", config.eps_list, deviations});
  report.plots.push_back(std::move(plot));
  report.runtime_seconds = clock.seconds();
  return report;
}

}  // namespace lowmach
