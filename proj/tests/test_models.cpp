#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "lowmach/models.hpp"
#include "oracles.hpp"

using namespace lowmach;

namespace {

double max_diff(const Field& a, const Field& b) { return (a - b).max_abs(); }

double max_diff(const Bundle& a, const Bundle& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_diff(a[i], b[i]));
  return m;
}

FlowState smooth_state(const GridPtr& g, std::uint64_t seed, double amplitude, int band = 3) {
  FlowState u = FlowState::zero(g);
  u.p = random_band_limited_field(seed, g, band, 0.0, amplitude);
  for (int a = 0; a < g->dim(); ++a) u.v[a] = random_band_limited_field(seed + 1 + a, g, band, 0.0, amplitude);
  u.theta = random_band_limited_field(seed + 10, g, band, 0.0, amplitude);
  return u;
}

/// Constant coefficients that turn the fluctuation system into the example system.
CoefficientSet example_coefficients(double beta) {
  CoefficientSet c;
  c.name = "example";
  c.g1 = c.g2 = c.g3 = [](double, double) { return 1.0; };
  c.chi1 = c.chi2 = [](double) { return 1.0; };
  c.chi3 = [beta](double) { return beta; };
  c.beta = [](double) { return 1.0; };
  c.zeta = [](double) { return 1.0; };
  c.eta = [](double) { return 0.0; };
  return c;
}

}  // namespace

TEST_SUITE("gas_models") {
  TEST_CASE("every model is at rest at the reference state") {
    const auto g = make_grid(2, 32);
    for (const PerfectGas& gas : {PerfectGas{}, PerfectGas{1.0, 1.5, {2.0, 0.7}, {0.5, 0.7}, {0.2, 0.7}, 0.5}}) {
      const auto c = perfect_gas(gas);
      const ParamTriple a(0.1, 1.0, 1.0);
      CHECK(max_abs(rhs_main(FlowState::zero(g), a, c).pack()) == 0.0);
      PrimitiveState ref{Field::constant(g, 1.0), {Field(g), Field(g)}, Field::constant(g, 1.0)};
      CHECK(max_abs(rhs_primitive(ref, a, gas).pack()) <= 1e-14);
      SymmetrizedState s{Field(g), {Field(g), Field(g)}, Field(g)};
      CHECK(max_abs(rhs_symmetrized(s, a, c).pack()) == 0.0);
      const LimitTendency lt = rhs_limit(LimitState{{Field(g), Field(g)}, Field(g)}, 1.0, 1.0, c);
      CHECK(max_abs(lt.rate.pack()) == 0.0);
      CHECK(lt.pi.max_abs() == 0.0);
      const auto frozen = freeze_coefficients(Field(g), {Field(g), Field(g)}, c);
      CHECK(max_abs(rhs_linearized(FlowState::zero(g), frozen, a).pack()) == 0.0);
    }
    CHECK(max_abs(rhs_example(FlowState::zero(g), 0.1, 2.0).pack()) == 0.0);
    const auto coef = WaveCoefficients::stationary(Field::constant(g, 1.0), Field::constant(g, 1.0), 1.0, 1.0);
    CHECK(max_abs(rhs_wave(0.0, WaveState{Field(g), Field(g)}, 0.1, coef).pack()) == 0.0);
  }

  TEST_CASE("pressure mode drives the velocity only") {
    const auto g = make_grid(2, 32);
    const auto c = perfect_gas(PerfectGas{});
    const double eps = 0.2;
    FlowState u = FlowState::zero(g);
    u.p = Field::from_function(g, [](std::span<const double> x) { return std::cos(x[0]); });
    const FlowState r = rhs_main(u, ParamTriple(eps, 0.0, 0.0), c);
    CHECK(r.p.max_abs() < 1e-15);
    CHECK(r.theta.max_abs() < 1e-15);
    CHECK(r.v[1].max_abs() < 1e-15);
    const Field expected = Field::from_function(
        g, [&](std::span<const double> x) { return std::sin(x[0]) / (eps * c.g2(0.0, 0.0)); });
    CHECK(max_diff(r.v[0], expected) < 1e-12);
  }

  TEST_CASE("heat conduction matches a finite-difference evaluation") {
    const auto c = perfect_gas(PerfectGas{});
    const auto g = make_grid(1, 64);
    FlowState u = FlowState::zero(g);
    u.theta = Field::from_function(g, [](std::span<const double> x) { return std::cos(x[0]); });
    const double eps = 0.3;
    const FlowState r = rhs_main(u, ParamTriple(eps, 0.0, 1.0), c);

    // d/dt theta = chi3(0) div(beta(theta) grad theta) / g3 with beta = e^theta.
    const int fine = 512;
    const double dx = 2.0 * std::numbers::pi / fine;
    std::vector<double> th(fine);
    for (int i = 0; i < fine; ++i) th[i] = std::cos(i * dx);
    auto flux = oracle::central_difference(th, dx);
    for (int i = 0; i < fine; ++i) flux[i] *= std::exp(th[i]);
    const auto div_flux = oracle::central_difference(flux, dx);
    const auto got = r.theta.values();
    double err = 0.0, scale = 0.0;
    for (int i = 0; i < 64; ++i) {
      const double expected = c.chi3(0.0) * div_flux[8 * i] / c.g3(0.0, 0.0);
      err = std::max(err, std::abs(got[i] - expected));
      scale = std::max(scale, std::abs(expected));
    }
    CHECK(err <= 1e-7 * scale);
  }

  TEST_CASE("primitive and fluctuation forms agree") {
    const auto g = make_grid(2, 64);
    for (const PerfectGas& gas : {PerfectGas{}, PerfectGas{1.0, 1.5, {1.0, 0.5}, {1.0, 0.5}, {0.3, 0.5}, 1.0}}) {
      const auto c = perfect_gas(gas);
      const double eps = 0.5;
      const ParamTriple a(eps, 1.0, 1.0);
      const FlowState u = smooth_state(g, 3, 0.3, 2);
      const PrimitiveState prim = from_fluctuation(u, eps);
      const PrimitiveState rp = rhs_primitive(prim, a, gas);
      const FlowState rf = rhs_main(u, a, c);
      const auto P = prim.P.values(), T = prim.T.values();
      const auto dp = rf.p.values(), dth = rf.theta.values();
      const auto gotP = rp.P.values(), gotT = rp.T.values();
      double errP = 0.0, errT = 0.0, scaleP = 0.0, scaleT = 0.0;
      for (std::size_t x = 0; x < P.size(); ++x) {
        errP = std::max(errP, std::abs(gotP[x] - eps * P[x] * dp[x]));
        errT = std::max(errT, std::abs(gotT[x] - T[x] * dth[x]));
        scaleP = std::max(scaleP, std::abs(gotP[x]));
        scaleT = std::max(scaleT, std::abs(gotT[x]));
      }
      CHECK(errP <= 1e-8 * scaleP);
      CHECK(errT <= 1e-8 * scaleT);
      for (int i = 0; i < 2; ++i) CHECK(max_diff(rp.v[i], rf.v[i]) <= 1e-8 * rf.v[i].max_abs());
    }
  }

  TEST_CASE("primitive system rejects nonpositive states") {
    const auto g = make_grid(1, 16);
    PrimitiveState bad{Field::constant(g, 1.0), {Field(g)}, Field::constant(g, -1.0)};
    CHECK_THROWS_AS(rhs_primitive(bad, ParamTriple(0.5, 0.0, 0.0), PerfectGas{}), std::domain_error);
    CHECK_THROWS_AS(to_fluctuation(bad, 0.5), std::domain_error);
  }

  TEST_CASE("change of variables") {
    const auto g = make_grid(2, 16);
    const double eps = 0.25;
    PrimitiveState ref{Field::constant(g, 1.0), {Field(g), Field(g)}, Field::constant(g, 1.0)};
    const FlowState zero = to_fluctuation(ref, eps);
    CHECK(zero.p.max_abs() == 0.0);
    CHECK(zero.theta.max_abs() == 0.0);
    PrimitiveState doubled{Field::constant(g, 2.0), {Field(g), Field(g)}, Field::constant(g, 1.0)};
    CHECK(to_fluctuation(doubled, eps).p.mean() == doctest::Approx(std::log(2.0) / eps).epsilon(1e-15));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(0.5, 2.0);
    std::vector<double> P(g->size()), T(g->size());
    for (auto& x : P) x = pos(rng);
    for (auto& x : T) x = pos(rng);
    PrimitiveState s{Field::from_values(g, P), {Field(g), Field(g)}, Field::from_values(g, T)};
    const PrimitiveState back = from_fluctuation(to_fluctuation(s, eps, 1.3, 0.7), eps, 1.3, 0.7);
    const auto bp = back.P.values(), bt = back.T.values();
    for (std::size_t x = 0; x < P.size(); ++x) {
      CHECK(std::abs(bp[x] - P[x]) <= 1e-12 * P[x]);
      CHECK(std::abs(bt[x] - T[x]) <= 1e-12 * T[x]);
    }
  }

  TEST_CASE("example system per-mode matrix") {
    const auto g = make_grid(2, 16);
    const double eps = 0.1, beta = 2.0;
    const auto symbol = example_symbol(g, eps, beta);
    for (std::size_t i = 0; i < g->size(); ++i) {
      const int kx = g->mode_index(i, 0), ky = g->mode_index(i, 1);
      if (kx == -8 || ky == -8) continue;
      const auto ref = oracle::example_mode_matrix({double(kx), double(ky)}, eps, beta);
      CHECK((symbol(i) - ref).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + ref.cwiseAbs().maxCoeff()));
    }
    CHECK_THROWS_AS(rhs_example(FlowState::zero(g), eps, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(example_symbol(g, eps, 0.5), std::invalid_argument);
  }

  TEST_CASE("example system energy dissipation identity") {
    const auto g = make_grid(2, 32);
    const double eps = 0.1, beta = 2.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const FlowState u = smooth_state(g, seed, 1.0, 8);
      const FlowState r = rhs_example(u, eps, beta);
      const auto gth = grad(u.theta);
      const auto gth_dot = grad(r.theta);
      std::vector<Field> ve, ve_dot;
      for (int i = 0; i < 2; ++i) {
        ve.push_back(u.v[i] - gth[i]);
        ve_dot.push_back(r.v[i] - gth_dot[i]);
      }
      const double dE = 2.0 * inner(u.p, r.p) + 2.0 * inner(ve, ve_dot) + 2.0 * (beta - 1.0) * inner(gth, gth_dot);
      const Field defect = div(ve) - (beta - 1.0) * laplacian(u.theta);
      const double expected = -2.0 * inner(defect, defect);
      CHECK(std::abs(dE - expected) <= 1e-10 * std::abs(expected));
    }
  }

  TEST_CASE("fluctuation system reduces to the example system") {
    const auto g = make_grid(2, 32);
    const double eps = 0.2, beta = 2.0;
    const auto c = example_coefficients(beta);
    const FlowState u = smooth_state(g, 4, 1.0, 8);
    const FlowState full = rhs_main(u, ParamTriple(eps, 0.0, 1.0), c, RhsOptions{false, false});
    CHECK(max_diff(full.pack(), rhs_example(u, eps, beta).pack()) <= 1e-12 * max_abs(full.pack()));
  }

  TEST_CASE("limit system") {
    const auto g = make_grid(2, 32);
    const auto c = perfect_gas(PerfectGas{});
    // Taylor-Green vortex: divergence free, theta = 0, mu = 0.
    LimitState tg{{Field::from_function(g, [](std::span<const double> x) { return std::sin(x[0]) * std::cos(x[1]); }),
                   Field::from_function(g, [](std::span<const double> x) { return -std::cos(x[0]) * std::sin(x[1]); })},
                  Field(g)};
    const LimitTendency r = rhs_limit(tg, 0.0, 1.0, c);
    CHECK(div(r.rate.v).max_abs() <= 1e-10);
    CHECK(r.pi.max_abs() > 0.1);
    CHECK(r.rate.theta.max_abs() == 0.0);
    // For Taylor-Green the pressure is (cos 2x + cos 2y)/4 up to the factor g2(0,0) = 1.
    const Field pi_exact = Field::from_function(
        g, [](std::span<const double> x) { return 0.25 * (std::cos(2.0 * x[0]) + std::cos(2.0 * x[1])); });
    CHECK(max_diff(r.pi, pi_exact) <= 1e-10);

    // kappa = 0 requires div v = 0.
    LimitState compressive{{Field::from_function(g, [](std::span<const double> x) { return std::sin(x[0]); }),
                            Field(g)},
                           Field(g)};
    CHECK_THROWS_AS(rhs_limit(compressive, 1.0, 0.0, c), std::domain_error);
    const LimitState fixed = project_to_constraint(compressive, 0.0, c);
    CHECK(limit_constraint_defect(fixed, 0.0, c) <= 1e-12);

    // With conduction the projection satisfies the nonlinear constraint and the
    // pressure solve keeps it satisfied in time.
    LimitState warm{{random_band_limited_field(1, g, 3, 0.0, 0.2), random_band_limited_field(2, g, 3, 0.0, 0.2)},
                    random_band_limited_field(3, g, 3, 0.0, 0.2)};
    warm = project_to_constraint(warm, 1.0, c);
    CHECK(limit_constraint_defect(warm, 1.0, c) <= 1e-12);
    const LimitTendency wr = rhs_limit(warm, 1.0, 1.0, c);
    // A tangent tendency leaves a defect that is superlinear in the step, with
    // a ratio near 100 rather than the 10 of a transversal direction.
    auto defect_at = [&](double h) {
      LimitState moved{{warm.v[0] + h * wr.rate.v[0], warm.v[1] + h * wr.rate.v[1]}, warm.theta + h * wr.rate.theta};
      return limit_constraint_defect(moved, 1.0, c);
    };
    for (double h : {1e-3, -1e-3}) {
      const double ratio = defect_at(h) / defect_at(0.1 * h);
      CHECK(ratio >= 50.0);
      CHECK(ratio <= 150.0);
    }
  }

  TEST_CASE("symmetrized form") {
    const auto g = make_grid(2, 32);
    auto c = perfect_gas(PerfectGas{});
    const double eps = 0.5;
    const FlowState u = smooth_state(g, 5, 0.3);
    const FlowState back = from_symmetrized(to_symmetrized(u, eps, c), eps, c);
    CHECK(max_diff(back.p, u.p) <= 1e-12);
    c.density = {};
    const SymmetrizedState zero{Field(g), {Field(g), Field(g)}, Field(g)};
    CHECK_THROWS_AS(rhs_symmetrized(zero, ParamTriple(eps, 0.0, 0.0), c), std::invalid_argument);
  }

  TEST_CASE("wave right-hand side") {
    const auto g = make_grid(1, 32);
    const Field one = Field::constant(g, 1.0);
    const auto coef = WaveCoefficients::stationary(one, one, 1.0, 1.0);
    const Field u = Field::from_function(g, [](std::span<const double> x) { return std::cos(3.0 * x[0]); });
    const WaveState r = rhs_wave(0.0, WaveState{u, Field(g)}, 0.5, coef);
    CHECK(max_diff(r.w, (-9.0 / 0.25) * u) <= 1e-12);
    const auto bad = WaveCoefficients::stationary(Field::constant(g, 1e-4), one, 1.0, 1.0);
    CHECK_THROWS_AS(rhs_wave(0.0, WaveState{u, Field(g)}, 0.5, bad), std::domain_error);
    CHECK(wave_energy(WaveState{u, Field(g)}, 0.5, one, one) == doctest::Approx(0.5 * 9.0 * 0.5));
  }

  TEST_CASE("singular penalization is skew-symmetric") {
    const auto g = make_grid(2, 32);
    const Field gamma1 = compose(random_band_limited_field(11, g, 3, 0.0, 0.3), [](double t) { return 1.0 + t * t; });
    const Field gamma2 = compose(random_band_limited_field(12, g, 3, 0.0, 0.3), [](double t) { return std::exp(t); });
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const FlowState u = smooth_state(g, 100 + seed, 1.0, 10);
      const FlowState su = apply_skew_penalization(gamma1, gamma2, u);
      const Bundle a = su.pack(), b = u.pack();
      const double form = inner(std::span<const Field>(a), std::span<const Field>(b));
      CHECK(std::abs(form) <= 1e-10 * inner(std::span<const Field>(b), std::span<const Field>(b)));
    }
  }

  TEST_CASE("viscous form is coercive up to a lower-order term") {
    const auto g = make_grid(2, 32);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double k1 = std::numeric_limits<double>::infinity();
    for (int sample = 0; sample < 200; ++sample) {
      const Field r1 = random_band_limited_field(rng(), g, 3, 0.0, 1.0);
      const Field r2 = random_band_limited_field(rng(), g, 3, 0.0, 1.0);
      const double amp = 0.3 * unit(rng);
      const Field zeta = compose(r1, [&](double x) { return 1.0 + amp * std::tanh(x); });
      const double shift = -0.4 + 1.4 * unit(rng);
      const Field eta = compose(r2, [&](double x) { return shift + 0.2 * std::tanh(x); });
      const std::vector<Field> u{random_band_limited_field(rng(), g, 6, 0.0, 1.0),
                                 random_band_limited_field(rng(), g, 6, 0.0, 1.0)};
      // m bounds zeta and zeta + eta from below; M bounds them and their gradients.
      double m = std::numeric_limits<double>::infinity(), M = 0.0;
      const auto zv = zeta.values(), ev = eta.values();
      for (std::size_t x = 0; x < zv.size(); ++x) {
        m = std::min({m, zv[x], zv[x] + ev[x]});
        M = std::max({M, std::abs(zv[x]), std::abs(ev[x])});
      }
      for (const auto& f : grad(zeta)) M = std::max(M, f.max_abs());
      for (const auto& f : grad(eta)) M = std::max(M, f.max_abs());
      REQUIRE(m > 0.0);
      double grad_u = 0.0, u2 = 0.0;
      for (const auto& f : u) {
        for (const auto& gf : grad(f)) grad_u += inner(gf, gf);
        u2 += inner(f, f);
      }
      const double lhs = viscous_form(zeta, eta, u);
      k1 = std::min(k1, (lhs + M * M / m * u2) / (m * grad_u));
    }
    CHECK(k1 >= 0.2);
  }
}
