#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lowmach/norms.hpp"

using namespace lowmach;

namespace {

FlowState random_state(const GridPtr& g, std::uint64_t seed, int band) {
  FlowState u = FlowState::zero(g);
  u.p = random_band_limited_field(seed, g, band, 0.0, 1.0);
  for (int a = 0; a < g->dim(); ++a) u.v[a] = random_band_limited_field(seed + 10 + a, g, band, 0.0, 1.0);
  u.theta = random_band_limited_field(seed + 20, g, band, 0.0, 1.0);
  return u;
}

double max_coeff_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) m = std::max(m, std::abs(a.coeffs()[i] - b.coeffs()[i]));
  return m;
}

}  // namespace

TEST_SUITE("sobolev_norms") {
  TEST_CASE("parameter triple ranges") {
    CHECK(ParamTriple(0.5, 0.25, 0.75).nu() == doctest::Approx(1.0));
    CHECK_THROWS_AS(ParamTriple(0.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ParamTriple(1.5, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ParamTriple(0.5, -0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ParamTriple(0.5, 0.0, 1.1), std::invalid_argument);
  }

  TEST_CASE("sobolev norm of single modes") {
    const auto g = make_grid(1, 16);
    CHECK(sobolev_norm(Field(g), 3.0) == 0.0);
    const Field u = Field::from_function(g, [](std::span<const double> x) { return 2.0 * std::cos(3.0 * x[0]); });
    CHECK(sobolev_norm(u, 2.0) == doctest::Approx(10.0 * std::sqrt(2.0)).epsilon(1e-14));
    const auto g2 = make_grid(2, 32);
    const Field r = random_band_limited_field(3, g2, 8, 0.0, 1.0);
    CHECK(sobolev_norm(r, 0.0) == doctest::Approx(l2_norm_physical(r)).epsilon(1e-12));
  }

  TEST_CASE("monotone in the order and triangle inequality") {
    const auto g = make_grid(2, 32);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const Field a = random_band_limited_field(seed, g, 9, 0.0, 1.0);
      const Field b = random_band_limited_field(seed + 100, g, 9, 1.0, 1.0);
      double prev = 0.0;
      for (double sigma : {-1.0, 0.0, 0.5, 1.0, 2.0, 4.0}) {
        CHECK(sobolev_norm(a, sigma) >= prev);
        prev = sobolev_norm(a, sigma);
      }
      for (double sigma : {0.0, 1.0, 3.0}) {
        CHECK(sobolev_norm(a + b, sigma) <= sobolev_norm(a, sigma) + sobolev_norm(b, sigma) + 1e-14);
        for (double rho : {0.0, 0.3, 1.0})
          CHECK(weighted_norm(a + b, sigma, rho) <=
                weighted_norm(a, sigma, rho) + weighted_norm(b, sigma, rho) + 1e-14);
      }
    }
  }

  TEST_CASE("weighted norm") {
    const auto g = make_grid(2, 32);
    const Field u = random_band_limited_field(4, g, 8, 0.0, 1.0);
    CHECK(weighted_norm(u, 2.0, 0.0) == sobolev_norm(u, 1.0));
    CHECK(weighted_norm(u, 2.0, 1.0) == doctest::Approx(sobolev_norm(u, 1.0) + sobolev_norm(u, 2.0)));
    CHECK_THROWS_AS(weighted_norm(u, 2.0, -1.0), std::invalid_argument);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const Field r = random_band_limited_field(seed, g, 8, 0.0, 1.0);
      for (double nu : {0.0, 0.25, 1.0}) CHECK(nu * sobolev_norm(r, 1.0) <= weighted_norm(r, 1.0, nu));
    }
  }

  TEST_CASE("initial norm") {
    const auto g = make_grid(2, 16);
    CHECK(initial_norm(FlowState::zero(g), ParamTriple(0.5, 1.0, 1.0), 2.0) == 0.0);
    const FlowState u = random_state(g, 1, 4);
    CHECK(initial_norm(u, ParamTriple(0.25, 0.0, 0.0), 2.0) == initial_norm(u, ParamTriple(0.5, 0.0, 0.0), 2.0));

    // Single mode: p = 2 cos x, so ||p||_{H^s}^2 = 2 * 2^s.
    FlowState m = FlowState::zero(g);
    m.p = Field::from_function(g, [](std::span<const double> x) { return 2.0 * std::cos(x[0]); });
    const double eps = 0.5, s = 1.0;
    const ParamTriple a(eps, 1.0, 0.0);
    const double h_s = std::sqrt(2.0 * std::pow(2.0, s));
    const double h_s1 = std::sqrt(2.0 * std::pow(2.0, s + 1.0));
    CHECK(initial_norm(m, a, s) == doctest::Approx(h_s + eps * 1.0 * h_s1).epsilon(1e-14));
  }

  TEST_CASE("composite accumulator") {
    const auto g = make_grid(2, 16);
    const ParamTriple a(0.5, 1.0, 0.0);
    CompositeNormAccumulator zero(a, 2.0);
    for (double t : {0.0, 0.3, 1.0}) zero.record(t, FlowState::zero(g));
    CHECK(zero.value() == 0.0);

    const FlowState u = random_state(g, 2, 4);
    CompositeNormAccumulator once(a, 2.0);
    once.record(0.0, u);
    CHECK(once.value() == doctest::Approx(initial_norm(u, a, 2.0)));
    CHECK(once.integral_term() == 0.0);

    // Constant state over [0, 1] with mu = 1, kappa = 0: the integrand is
    // mu ||grad v||^2_{H^{s+1}_{eps nu}} + mu ||grad p||^2_{H^s}.
    CompositeNormAccumulator coarse(a, 2.0), fine(a, 2.0);
    coarse.record(0.0, u);
    coarse.record(1.0, u);
    for (int i = 0; i <= 10; ++i) fine.record(0.1 * i, u);
    const double expected = dissipation_integrand(u, a, 2.0);
    CHECK(coarse.integral_term() == doctest::Approx(expected).epsilon(1e-14));
    CHECK(fine.value() == doctest::Approx(coarse.value()).epsilon(1e-14));
    std::vector<Field> dv;
    for (int i = 0; i < 2; ++i)
      for (const auto& f : grad(u.v[i])) dv.push_back(f);
    const double grad_v = std::pow(weighted_norm(std::span<const Field>(dv), 3.0, 0.5), 2);
    const auto gp = grad(u.p);
    const double grad_p = std::pow(sobolev_norm(std::span<const Field>(gp), 2.0), 2);
    CHECK(expected == doctest::Approx(grad_v + grad_p).epsilon(1e-12));

    CHECK_THROWS_AS(coarse.record(0.5, u), std::invalid_argument);
  }

  TEST_CASE("accumulator terms are nondecreasing") {
    const auto g = make_grid(2, 16);
    const ParamTriple a(0.25, 1.0, 1.0);
    CompositeNormAccumulator acc(a, 1.0);
    double sup = 0.0, integral = 0.0;
    for (int i = 0; i < 10; ++i) {
      acc.record(0.1 * i, random_state(g, 30 + i, 4));
      CHECK(acc.sup_term() >= sup);
      CHECK(acc.integral_term() >= integral);
      sup = acc.sup_term();
      integral = acc.integral_term();
    }
    CHECK(acc.value() == doctest::Approx(sup + std::sqrt(integral)));
  }

  TEST_CASE("frequency split report") {
    const auto g = make_grid(2, 32);
    const FlowState u = random_state(g, 3, 8);
    const auto inviscid = frequency_split_report(u, ParamTriple(0.5, 0.0, 0.0), 2.0);
    CHECK(inviscid.split_high == 0.0);
    CHECK(inviscid.split_low == inviscid.composite);

    // max |k| = 2 <= 1/(2 eps nu) with eps nu = 0.25 keeps everything in the low part.
    const FlowState low = random_state(g, 4, 1);
    const ParamTriple a(0.25, 0.5, 0.5);
    const auto r = frequency_split_report(low, a, 2.0);
    CHECK(r.split_high == 0.0);
    CHECK(r.split_low == doctest::Approx(r.composite));

    const FlowState j = mollify(u, 0.25);
    const Field rest = u.p - j.p;
    CHECK(max_coeff_diff(j.p + rest, u.p) <= 1e-16);
    CHECK(r.h_sigma.size() == 3);
  }

  TEST_CASE("mollified fields gain one weighted derivative at bounded cost") {
    const auto g = make_grid(2, 64);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const Field u = random_band_limited_field(seed, g, 21, 0.0, 1.0);
      for (double h : {0.5, 0.25, 0.125, 0.0625}) {
        const Field j = mollify(u, h);
        for (double sigma : {0.0, 1.0, 2.0})
          worst = std::max(worst, weighted_norm(j, sigma + 1.0, h) / sobolev_norm(j, sigma));
      }
    }
    CHECK(worst <= 4.0);
  }
}
