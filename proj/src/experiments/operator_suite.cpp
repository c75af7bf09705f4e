#include <algorithm>
#include <cmath>
#include <sstream>

#include "common.hpp"
#include "lowmach/experiments.hpp"
#include "lowmach/norms.hpp"

namespace lowmach {
namespace {

// Pointwise product without dealiasing; callers keep the bands small enough
// that the product is exact on the grid.
Field plain_product(const Field& a, const Field& b) {
  auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) va[i] *= vb[i];
  return Field::from_values(a.grid_ptr(), va);
}

double max_coeff_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) m = std::max(m, std::abs(a.coeffs()[i] - b.coeffs()[i]));
  return m;
}

double bracket(double x) { return std::sqrt(1.0 + x * x); }

std::vector<double> dyadic_scales(int first, int last) {
  std::vector<double> h;
  for (int j = first; j <= last; ++j) h.push_back(std::ldexp(1.0, -j));
  return h;
}

std::string describe(const std::string& what, double worst, double at_h) {
  std::ostringstream os;
  os << what << "; worst " << worst << " at h = " << at_h;
  return os.str();
}

}  // namespace

ExperimentReport run_operator_suite(const OperatorSuiteConfig& config) {
  detail::Stopwatch clock;
  ExperimentReport report;
  report.name = "verify-operators";
  const GridPtr grid = make_grid(config.dim, config.points);
  const int n = config.points;
  const auto samples = static_cast<std::size_t>(config.samples);
  const auto seeds = detail::sub_seeds(config.seed, 6 * samples);
  const std::vector<double> scales = dyadic_scales(1, 6);
  report.columns = {"h", "idempotence_error", "remainder_K_r0", "remainder_K_r1", "remainder_K_r2",
                    "product_K", "friedrichs_rms"};

  // Fields with energy at every resolved frequency.
  std::vector<Field> rough;
  for (std::size_t i = 0; i < samples; ++i)
    rough.push_back(random_field_with_spectrum(seeds[i], grid, n / 2 - 1, [](double) { return 1.0; }));

  // J_h J_{h/2} = J_h
  std::vector<double> idem(scales.size(), 0.0);
  // ||(I - J_h) u||_{H^{sigma - r}} <= h^r ||u||_{H^sigma}
  const double sigma = 2.0;
  std::vector<std::vector<double>> remainder(3, std::vector<double>(scales.size(), 0.0));
  for (std::size_t j = 0; j < scales.size(); ++j) {
    const double h = scales[j];
    for (const Field& u : rough) {
      const Field jh = mollify(u, h);
      idem[j] = std::max(idem[j], max_coeff_diff(mollify(mollify(u, 0.5 * h), h), jh));
      const Field high = u - jh;
      for (int r = 0; r <= 2; ++r) {
        const double ratio = sobolev_norm(high, sigma - r) / (std::pow(h, r) * sobolev_norm(u, sigma));
        remainder[static_cast<std::size_t>(r)][j] = std::max(remainder[static_cast<std::size_t>(r)][j], ratio);
      }
    }
  }
  const double idem_worst = *std::max_element(idem.begin(), idem.end());
  report.add_check("mollifier-idempotence", idem_worst <= 1e-15, idem_worst, 1e-15,
                   "max coefficient difference of J_h J_{h/2} u and J_h u");
  double rem_worst = 0.0;
  for (const auto& row : remainder) rem_worst = std::max(rem_worst, *std::max_element(row.begin(), row.end()));
  report.add_check("mollifier-remainder", rem_worst <= 1.0, rem_worst, 1.0,
                   "fitted K in ||(I-J_h)u||_{H^{s-r}} <= K h^r ||u||_{H^s}, r = 0, 1, 2");

  // Symbol inequalities over every grid mode.
  const std::vector<double> sym_scales = dyadic_scales(0, 6);
  double sym_remainder = 0.0;
  double sym_smoothing = 0.0;
  double sym_low = 0.0;
  double sym_high = 0.0;
  const std::vector<std::pair<double, double>> m_pairs{{0.0, 0.0}, {0.0, 1.0}, {0.5, 1.0},
                                                       {1.0, 1.0}, {1.0, 2.0}, {2.0, 3.0}};
  const std::vector<double> orders{0.5, 1.0, 2.0, 3.0};
  const std::vector<double> cs{1.0, 0.5, 0.25};
  for (double h : sym_scales) {
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const double xi = std::sqrt(grid->wavenumber_norm2(i));
      for (int r = 0; r <= 2; ++r)
        sym_remainder = std::max(sym_remainder, (1.0 - cutoff_profile(h * xi)) * std::pow(bracket(xi), -r) /
                                                    std::pow(h, r));
      for (auto [m1, m2] : m_pairs)
        sym_smoothing = std::max(sym_smoothing,
                                 std::pow(h, m1) * std::pow(bracket(h * xi), -m2) * std::pow(bracket(xi), m1));
      for (double m : orders)
        for (double c : cs) {
          sym_low = std::max(sym_low, cutoff_profile(c * h * xi) * std::pow(bracket(h * xi), m) /
                                          std::pow(bracket(2.0 / c), m));
          sym_high = std::max(sym_high, (1.0 - cutoff_profile(c * h * xi)) * std::pow(bracket(h * xi), m) *
                                            std::pow(bracket(xi), -m) /
                                            (std::pow(h, m) * std::pow(bracket(c), m)));
        }
    }
  }
  const double tiny = 1e-12;
  report.add_check("remainder-symbol", sym_remainder <= 1.0 + tiny, sym_remainder, 1.0,
                   "max over modes of (1 - j(h xi)) <xi>^{-r} / h^r");
  report.add_check("smoothing-symbol", sym_smoothing <= 1.0 + tiny, sym_smoothing, 1.0,
                   "max over modes of h^m1 <h xi>^{-m2} <xi>^m1, m1 <= m2");
  report.add_check("low-frequency-symbol", sym_low <= 1.0 + tiny, sym_low, 1.0,
                   "max of j(c h xi) <h xi>^m / <2/c>^m");
  report.add_check("high-frequency-symbol", sym_high <= 1.0 + tiny, sym_high, 1.0,
                   "max of (1 - j(c h xi)) <h xi>^m <xi>^{-m} / (h^m <c>^m)");

  // Product estimate with sigma0 = 2, sigma1 = sigma2 = 1/2, m1 = m2 = 1/2.
  const int product_band = n / 4 - 1;
  std::vector<double> product_k(scales.size(), 0.0);
  double product_worst = 0.0;
  double product_h = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Field u1 = random_band_limited_field(seeds[samples + s], grid, product_band, 0.0, 1.0);
    const Field u2 = random_band_limited_field(seeds[2 * samples + s], grid, product_band, 0.0, 1.0);
    const Field prod = plain_product(u1, u2);
    for (std::size_t j = 0; j < scales.size(); ++j) {
      const double h = scales[j];
      const double lhs = sobolev_norm(bessel(prod, h, -1.0), 1.0);
      const double rhs = sobolev_norm(bessel(u1, h, -0.5), 1.5) * sobolev_norm(bessel(u2, h, -0.5), 1.5);
      const double k = lhs / rhs;
      product_k[j] = std::max(product_k[j], k);
      if (k > product_worst) {
        product_worst = k;
        product_h = h;
      }
    }
  }
  report.add_check("product-estimate", product_worst <= 10.0, product_worst, 10.0,
                   describe("fitted K for sigma0 = 2, sigma_i = m_i = 1/2", product_worst, product_h));

  // Commutator of Lambda^1 with multiplication: sigma0 = 3, sigma = 1.
  double commutator_worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Field f = random_band_limited_field(seeds[3 * samples + s], grid, 3, 3.0, 1.0);
    const Field u = random_band_limited_field(seeds[4 * samples + s], grid, n / 3, 1.0, 1.0);
    const Field comm = bessel(plain_product(f, u), 1.0, 1.0) - plain_product(f, bessel(u, 1.0, 1.0));
    commutator_worst = std::max(commutator_worst, sobolev_norm(comm, 1.0) / (sobolev_norm(f, 3.0) *
                                                                              sobolev_norm(u, 1.0)));
  }
  report.add_check("commutator-estimate", commutator_worst <= 10.0, commutator_worst, 10.0,
                   "fitted K in ||[Lambda^1, f] u||_{H^1} <= K ||f||_{H^3} ||u||_{H^1}");

  // Friedrichs commutator J_h(f u) - f J_h u in L2 for smooth f and rough u.
  const std::vector<double> fr_scales = dyadic_scales(1, 4);
  std::vector<double> fr_rms(fr_scales.size(), 0.0);
  double fr_k = 0.0;
  const double sigma0 = 3.0;
  const double half_dim = 0.5 * config.dim;
  for (std::size_t s = 0; s < samples; ++s) {
    const Field f = random_band_limited_field(seeds[5 * samples + s], grid, 2, sigma0, 1.0);
    const Field u = random_field_with_spectrum(seeds[s] ^ 0x9e3779b97f4a7c15ULL, grid, n / 2 - 3,
                                               [half_dim](double k) { return std::pow(std::max(k, 1.0), -half_dim); });
    const Field fu = plain_product(f, u);
    for (std::size_t j = 0; j < fr_scales.size(); ++j) {
      const double h = fr_scales[j];
      const Field comm = mollify(fu, h) - plain_product(f, mollify(u, h));
      const double l2 = sobolev_norm(comm, 0.0);
      fr_rms[j] += l2 * l2;
      fr_k = std::max(fr_k, l2 / (h * sobolev_norm(f, sigma0) * sobolev_norm(bessel(u, h, -sigma0), 0.0)));
    }
  }
  for (double& r : fr_rms) r = std::sqrt(r / static_cast<double>(samples));
  const double slope = loglog_slope(fr_scales, fr_rms);
  report.add_check("friedrichs-slope", slope >= 0.85 && slope <= 1.15, slope, 0.85,
                   "log-log slope in h of the RMS of ||J_h(fu) - f J_h u||_{L2}; accepted range [0.85, 1.15]");
  report.add_check("friedrichs-constant", fr_k <= 10.0, fr_k, 10.0,
                   "fitted K in ||J_h(fu) - f J_h u||_{L2} <= K h ||f||_{H^3} ||Lambda_h^{-3} u||_{L2}");

  for (std::size_t j = 0; j < scales.size(); ++j) {
    const double fr = j < fr_rms.size() ? fr_rms[j] : std::nan("");
    report.rows.push_back({scales[j], idem[j], remainder[0][j], remainder[1][j], remainder[2][j], product_k[j], fr});
  }
  report.metrics = {{"idempotence_error", idem_worst}, {"remainder_K", rem_worst},
                    {"product_K", product_worst},     {"commutator_K", commutator_worst},
                    {"friedrichs_slope", slope},      {"friedrichs_K", fr_k}};
  Plot plot{"friedrichs", "Friedrichs commutator", "h", "RMS ||J_h(fu) - f J_h u||_{L2}", true, true, {}};
  plot.series.push_back({"measured", fr_scales, fr_rms});
  report.plots.push_back(plot);
  report.runtime_seconds = clock.seconds();
  return report;
}

}  // namespace lowmach
