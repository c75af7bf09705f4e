#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "common.hpp"
#include "lowmach/experiments.hpp"
#include "lowmach/models.hpp"

namespace lowmach {
namespace {

struct ExampleQuantities {
  double energy = 0.0;       // ||p||^2 + ||v_e||^2 + (beta-1)||grad theta||^2
  double dissipation = 0.0;  // ||div v_e - (beta-1) Laplacian theta||^2
  double weighted = 0.0;     // ||zeta||^2/(beta-1) + beta ||eps v||^2 + ||theta||^2
  double base = 0.0;         // ||(p, v, theta)||^2
  double gradients = 0.0;    // ||grad(theta, eps p, eps v)||^2
  double div_v = 0.0;        // ||div v||^2
  double grad_theta_h1 = 0.0;
  double grad_p = 0.0;
};

// Per-mode derivative and Laplacian symbols, computed once per grid.
struct ModeTable {
  explicit ModeTable(const Grid& g) : dim(g.dim()), derivative(g.size() * static_cast<std::size_t>(g.dim())), lap(g.size()) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      lap[i] = laplacian_symbol(g, i);
      for (int j = 0; j < dim; ++j) derivative[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)] = derivative_symbol(g, i, j);
    }
  }
  int dim;
  std::vector<Complex> derivative;
  std::vector<double> lap;
};

ExampleQuantities measure(const ModeTable& table, const Bundle& u, double eps, double beta) {
  const Grid& g = u[0].grid();
  const int d = g.dim();
  ExampleQuantities q;
  const auto p = u[0].coeffs();
  const auto th = u[static_cast<std::size_t>(d) + 1].coeffs();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lap = table.lap[i];
    Complex divv = 0.0;
    double ve2 = 0.0, v2 = 0.0, gth2 = 0.0, gp2 = 0.0, gv2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const Complex dj = table.derivative[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
      const Complex vj = u[static_cast<std::size_t>(j) + 1].coeffs()[i];
      divv += dj * vj;
      ve2 += std::norm(vj - dj * th[i]);
      v2 += std::norm(vj);
      gth2 += std::norm(dj * th[i]);
      gp2 += std::norm(dj * p[i]);
      for (int l = 0; l < d; ++l) gv2 += std::norm(dj * u[static_cast<std::size_t>(l) + 1].coeffs()[i]);
    }
    const double p2 = std::norm(p[i]);
    const double t2 = std::norm(th[i]);
    q.energy += p2 + ve2 + (beta - 1.0) * gth2;
    q.dissipation += std::norm(divv - beta * lap * th[i]);
    q.weighted += std::norm(eps * beta * p[i] - th[i]) / (beta - 1.0) + beta * eps * eps * v2 + t2;
    q.base += p2 + v2 + t2;
    q.gradients += gth2 + eps * eps * (gp2 + gv2);
    q.div_v += std::norm(divv);
    q.grad_theta_h1 += (1.0 + g.wavenumber_norm2(i)) * gth2;
    q.grad_p += gp2;
  }
  return q;
}

double largest_frequency(const SplitOperator& split, int band) {
  const Grid& g = *split.grid();
  double w = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool inside = true;
    for (int j = 0; j < g.dim(); ++j) inside = inside && std::abs(g.mode_index(i, j)) <= band;
    if (!inside) continue;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(split.symbol(i), false);
    w = std::max(w, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return w;
}

}  // namespace

ExperimentReport run_example42(const Example42Config& config) {
  if (!(config.beta > 1.0)) throw std::invalid_argument("example system needs beta > 1");
  if (config.eps_list.empty()) throw std::invalid_argument("eps list is empty");
  detail::Stopwatch clock;
  ExperimentReport report;
  report.name = "example42";
  report.columns = {"eps", "steps", "dt", "E0", "identity_residual_rel", "weighted_max_increase_rel",
                    "bound_ratio", "grad_p_integral"};
  const GridPtr grid = make_grid(config.dim, config.points);
  const FlowState data = detail::random_flow_state(grid, config.seed, config.band);
  const double beta = config.beta;
  const ModeTable table(*grid);

  std::vector<double> ratios;
  double worst_residual = 0.0;
  double worst_increase = 0.0;
  Plot energy_plot{"example42_energy", "Dissipated energy", "t", "E(t) / E(0)", false, true, {}};
  for (double eps : config.eps_list) {
    const SplitOperator split = build_example_split(grid, eps, beta);
    const double omega = largest_frequency(split, config.band);
    const double dt_target = omega > 0.0 ? config.step_fraction / omega : config.t_end;
    const auto pairs = static_cast<std::size_t>(std::ceil(config.t_end / (2.0 * dt_target)));
    const std::size_t steps = 2 * std::max<std::size_t>(pairs, 1);

    std::vector<ExampleQuantities> series;
    series.reserve(steps + 1);
    StepperConfig sc;
    sc.t_end = config.t_end;
    sc.dt = config.t_end / static_cast<double>(steps);
    const Trajectory tr = integrate(split, data.pack(), sc,
                                    {[&](double, const Bundle& u) { series.push_back(measure(table, u, eps, beta)); }});
    const double h = tr.dt;
    const double e0 = series.front().energy;

    // E(t_{2j+2}) - E(t_{2j}) + 2 * Simpson(D) over each pair of steps.
    double residual = 0.0;
    for (std::size_t j = 0; j + 2 <= steps; j += 2) {
      const double simpson = h / 3.0 * (series[j].dissipation + 4.0 * series[j + 1].dissipation +
                                        series[j + 2].dissipation);
      residual += std::abs(series[j + 2].energy - series[j].energy + 2.0 * simpson);
    }
    const double residual_rel = e0 > 0.0 ? residual / (config.t_end * e0) : 0.0;

    double increase = 0.0;
    const double w0 = series.front().weighted;
    for (std::size_t j = 1; j < series.size(); ++j)
      increase = std::max(increase, (series[j].weighted - series[j - 1].weighted) / std::max(w0, 1e-300));

    // sup_t of the bounded left-hand quantities over their initial value.
    double int_dissipative = 0.0, int_gp = 0.0, ratio = 0.0;
    const double rhs = std::sqrt(series.front().base) + std::sqrt(series.front().gradients);
    for (std::size_t j = 0; j < series.size(); ++j) {
      if (j > 0) {
        const auto& a = series[j - 1];
        const auto& b = series[j];
        int_dissipative += 0.5 * h * (a.div_v + a.grad_theta_h1 + b.div_v + b.grad_theta_h1);
        int_gp += 0.5 * h * (a.grad_p + b.grad_p);
      }
      const double lhs = std::sqrt(series[j].base) + std::sqrt(series[j].gradients) +
                         std::sqrt(int_dissipative) + std::sqrt(int_gp);
      if (rhs > 0.0) ratio = std::max(ratio, lhs / rhs);
    }
    if (rhs == 0.0) ratio = 1.0;
    ratios.push_back(ratio);
    worst_residual = std::max(worst_residual, residual_rel);
    worst_increase = std::max(worst_increase, increase);
    report.rows.push_back({eps, static_cast<double>(steps), h, e0, residual_rel, increase, ratio, int_gp});

    PlotSeries s;
    std::ostringstream label;
    label << "eps = " << eps;
    s.label = label.str();
    const std::size_t stride = std::max<std::size_t>(1, series.size() / 400);
    for (std::size_t j = 0; j < series.size(); j += stride) {
      s.x.push_back(h * static_cast<double>(j));
      s.y.push_back(e0 > 0.0 ? series[j].energy / e0 : 1.0);
    }
    energy_plot.series.push_back(std::move(s));
  }

  report.add_check("energy-identity", worst_residual <= 1e-8, worst_residual, 1e-8,
                   "|E(t+2h) - E(t) + 2 int D| summed per unit time, relative to E(0)");
  report.add_check("weighted-energy-monotone", worst_increase <= 1e-13, worst_increase, 1e-13,
                   "largest step-to-step increase of the weighted energy relative to its initial value");
  const double rmax = *std::max_element(ratios.begin(), ratios.end());
  const double rmin = *std::min_element(ratios.begin(), ratios.end());
  const double spread = rmin > 0.0 ? rmax / rmin : 1.0;
  report.add_check("uniform-in-eps-bound", spread <= config.uniformity_ratio, spread, config.uniformity_ratio,
                   "max/min over eps of the ratio of bounded quantities to initial data");
  report.metrics = {{"identity_residual_rel", worst_residual},
                    {"weighted_max_increase_rel", worst_increase},
                    {"bound_ratio_spread", spread}};
  report.plots.push_back(std::move(energy_plot));
  report.runtime_seconds = clock.seconds();
  return report;
}

}  // namespace lowmach
