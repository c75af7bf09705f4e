#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lowmach/integrator.hpp"
#include "lowmach/models.hpp"
#include "oracles.hpp"

using namespace lowmach;

namespace {

double l2(const Bundle& b) {
  double s = 0.0;
  for (const auto& f : b) s += inner(f, f);
  return std::sqrt(s);
}

double l2_diff(const Bundle& a, const Bundle& b) {
  Bundle d = a;
  axpy(d, -1.0, b);
  return l2(d);
}

std::size_t flat_index(const Grid& g, const std::vector<int>& k) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool match = true;
    for (int a = 0; a < g.dim(); ++a) match = match && g.mode_index(i, a) == k[static_cast<std::size_t>(a)];
    if (match) return i;
  }
  throw std::runtime_error("mode not on grid");
}

FlowState random_state(const GridPtr& g, std::uint64_t seed, int band, double amplitude) {
  FlowState u = FlowState::zero(g);
  u.p = random_band_limited_field(seed, g, band, 0.0, amplitude);
  for (int a = 0; a < g->dim(); ++a) u.v[a] = random_band_limited_field(seed + 1 + a, g, band, 0.0, amplitude);
  u.theta = random_band_limited_field(seed + 10, g, band, 0.0, amplitude);
  return u;
}

CoefficientSet constant_coefficients() {
  CoefficientSet c;
  c.name = "constant";
  c.g1 = c.g2 = c.g3 = [](double, double) { return 1.0; };
  c.chi1 = [](double) { return 0.5; };
  c.chi2 = c.chi3 = [](double) { return 1.0; };
  c.beta = c.zeta = [](double) { return 1.0; };
  c.eta = [](double) { return 0.0; };
  return c;
}

}  // namespace

TEST_SUITE("time_integration") {
  TEST_CASE("scheme names") {
    CHECK(parse_scheme("erk4") == Scheme::erk4_exponential);
    CHECK(parse_scheme("ars443") == Scheme::imex_ars443);
    CHECK(std::string(to_string(Scheme::imex_ars443)) == "ars443");
    CHECK_THROWS_AS(parse_scheme("euler"), std::invalid_argument);
  }

  TEST_CASE("zero stays zero") {
    const auto g = make_grid(2, 32);
    const auto c = perfect_gas(PerfectGas{});
    const ParamTriple a(0.1, 1.0, 1.0);
    const SplitOperator split = build_main_split(g, a, c);
    for (Scheme s : {Scheme::erk4_exponential, Scheme::imex_ars443}) {
      Stepper stepper(split, s);
      CHECK(max_abs(stepper.step(0.0, FlowState::zero(g).pack(), 0.01)) == 0.0);
      StepperConfig cfg;
      cfg.scheme = s;
      cfg.dt = 0.01;
      cfg.t_end = 0.1;
      CHECK(max_abs(integrate(split, FlowState::zero(g).pack(), cfg).final_state) <= 1e-14);
    }
  }

  TEST_CASE("single mode of the example system matches a dense ODE solve") {
    const auto g = make_grid(2, 32);
    const double eps = 0.1, beta = 2.0;
    const std::vector<int> k{2, 1};
    const std::size_t idx = flat_index(*g, k);
    const std::size_t conj_idx = flat_index(*g, {-k[0], -k[1]});
    const Eigen::VectorXcd y0 = (Eigen::VectorXcd(4) << Complex(0.3, 0.1), Complex(-0.2, 0.4), Complex(0.1, 0.0),
                                 Complex(0.5, -0.2))
                                    .finished();
    Bundle u0 = FlowState::zero(g).pack();
    for (int c = 0; c < 4; ++c) {
      u0[c].coeffs()[idx] = y0[c];
      u0[c].coeffs()[conj_idx] = std::conj(y0[c]);
    }
    const Eigen::MatrixXcd m = oracle::example_mode_matrix({2.0, 1.0}, eps, beta);
    const oracle::Dopri5 ode([&](double, const Eigen::VectorXcd& y) { return Eigen::VectorXcd(m * y); }, 1e-13,
                             1e-15);
    const Eigen::VectorXcd ref = ode.solve(y0, 0.0, 1.0);

    for (const StiffOptions opts : {StiffOptions{true}, StiffOptions{false}}) {
      StepperConfig cfg;
      cfg.t_end = 1.0;
      cfg.dt = opts.diffusion ? 0.1 : 2.5e-4;
      const auto tr = integrate(build_example_split(g, eps, beta, opts), u0, cfg);
      double err = 0.0;
      for (int c = 0; c < 4; ++c) err = std::max(err, std::abs(tr.final_state[c].coeffs()[idx] - ref[c]));
      CAPTURE(opts.diffusion);
      CHECK(err <= 1e-10);
    }
  }

  TEST_CASE("skew stiff part preserves the norm") {
    const auto g = make_grid(2, 32);
    const double eps = 0.05;
    // Penalization only: (p, v) block is skew-Hermitian and theta does not feed back.
    const SymbolFn symbol = [&](std::size_t mode) {
      Eigen::MatrixXcd l = example_symbol(g, eps, 2.0, StiffOptions{false})(mode);
      l.row(3).setZero();
      return l;
    };
    const SplitOperator split(g, 4, symbol);
    Bundle u = random_state(g, 1, 10, 1.0).pack();
    u[3] = Field(g);
    const double n0 = l2(u);
    Stepper stepper(split, Scheme::erk4_exponential);
    for (int i = 0; i < 50; ++i) u = stepper.step(0.0, u, 0.02);
    CHECK(std::abs(l2(u) - n0) <= 1e-12 * n0);
  }

  TEST_CASE("pure penalization conserves the acoustic energy") {
    const auto g = make_grid(2, 32);
    const ParamTriple a(0.05, 0.0, 0.0);
    const SplitOperator split = build_main_split(g, a, constant_coefficients(), RhsOptions{false, false});
    FlowState u0 = random_state(g, 2, 8, 1.0);
    StepperConfig cfg;
    cfg.t_end = 1.0;
    cfg.dt = 0.01;
    const auto acoustic = [](const Bundle& b) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += inner(b[i], b[i]);
      return s;
    };
    const double e0 = acoustic(u0.pack());
    const auto tr = integrate(split, u0.pack(), cfg);
    CHECK(std::abs(acoustic(tr.final_state) - e0) <= 1e-10 * e0);
  }

  TEST_CASE("choose_dt") {
    const auto g = make_grid(2, 32);
    CHECK(choose_dt(*g, 0.0, 0.0, 1.0, 0.01) == 0.01);
    const auto fine = make_grid(2, 64);
    CHECK(choose_dt(*fine, 2.0, 0.0, 0.5, 1.0) == doctest::Approx(0.5 * choose_dt(*g, 2.0, 0.0, 0.5, 1.0)));
    CHECK(choose_dt(*g, 0.0, 100.0, 0.5, 1.0) == doctest::Approx(0.5 * 2.5 / 100.0));
    CHECK_THROWS_AS(choose_dt(*g, 0.0, 0.0, 0.0, 1.0), std::invalid_argument);

    // Same data, two very different eps: the exponential splitting keeps the step.
    const auto c = perfect_gas(PerfectGas{});
    const auto fine64 = make_grid(2, 64);
    auto dt_for = [&](const FlowState& u, double eps) {
      return choose_dt(*fine64, max_speed(u.v), main_soft_rate(u, ParamTriple(eps, 1.0, 1.0), c), 0.5, 1.0);
    };
    FlowState u = FlowState::zero(fine64);
    u.p = random_band_limited_field(1, fine64, 2, 0.0, 0.3);
    for (int a = 0; a < 2; ++a) u.v[a] = random_band_limited_field(2 + a, fine64, 2, 0.0, 0.3);
    u.theta = random_band_limited_field(9, fine64, 2, 0.0, 0.05);
    CHECK(std::abs(dt_for(u, 0.1) - dt_for(u, 0.01)) <= 0.1 * dt_for(u, 0.1));

    // The pressure dependence of the transport coefficients only shrinks with
    // eps, so a smaller eps never forces a smaller step.
    for (std::uint64_t seed : {3u, 4u, 5u}) {
      FlowState w = random_state(fine64, seed, 2, 0.5);
      for (double theta_amplitude : {0.0, 0.05}) {
        w.theta = random_band_limited_field(seed + 20, fine64, 2, 0.0, theta_amplitude);
        CHECK(dt_for(w, 0.01) >= dt_for(w, 0.1));
      }
    }
  }

  TEST_CASE("zero final time returns the initial state after one monitor call") {
    const auto g = make_grid(2, 16);
    const SplitOperator split = build_example_split(g, 0.1, 2.0);
    const Bundle u0 = random_state(g, 4, 4, 1.0).pack();
    int calls = 0;
    StepperConfig cfg;
    cfg.t_end = 0.0;
    const auto tr = integrate(split, u0, cfg, {[&](double t, const Bundle&) {
                                CHECK(t == 0.0);
                                ++calls;
                              }});
    CHECK(calls == 1);
    CHECK(l2_diff(tr.final_state, u0) == 0.0);
    CHECK(tr.steps == 0);
  }

  TEST_CASE("integrate hits the final time with a uniform step") {
    const auto g = make_grid(1, 16);
    const SplitOperator split = build_example_split(g, 0.1, 2.0);
    std::vector<double> times;
    StepperConfig cfg;
    cfg.t_end = 1.0;
    cfg.dt = 0.3;
    const auto tr = integrate(split, random_state(g, 5, 3, 1.0).pack(), cfg,
                              {[&](double t, const Bundle&) { times.push_back(t); }});
    CHECK(tr.steps == 4);
    CHECK(tr.dt == doctest::Approx(0.25));
    CHECK(times.size() == 5);
    CHECK(times.back() == 1.0);
  }

  TEST_CASE("heat equation decays at the exact Fourier rate") {
    const auto g = make_grid(1, 32);
    const double kappa = 0.7;
    // Half of the diffusion is stiff, the full operator is the right-hand side,
    // so the explicit stages carry the other half.
    const SplitOperator split(
        g, 1, [&](std::size_t i) { return Eigen::MatrixXcd::Constant(1, 1, 0.5 * kappa * laplacian_symbol(*g, i)); },
        [&](double, const Bundle& u) { return Bundle{kappa * laplacian(u[0])}; });
    const Field theta = random_band_limited_field(6, g, 4, 0.0, 1.0);
    StepperConfig cfg;
    cfg.t_end = 0.5;
    for (Scheme s : {Scheme::erk4_exponential, Scheme::imex_ars443}) {
      cfg.scheme = s;
      cfg.dt = s == Scheme::erk4_exponential ? 1e-3 : 1e-4;
      const auto tr = integrate(split, {theta}, cfg);
      double err = 0.0;
      for (std::size_t i = 0; i < g->size(); ++i) {
        const Complex exact = theta.coeffs()[i] * std::exp(kappa * laplacian_symbol(*g, i) * cfg.t_end);
        err = std::max(err, std::abs(tr.final_state[0].coeffs()[i] - exact));
      }
      CAPTURE(std::string(to_string(s)));
      CHECK(err <= 1e-10);
    }
  }

  TEST_CASE("fourth-order convergence of the exponential scheme") {
    const auto g = make_grid(2, 16);
    const double eps = 0.5, beta = 2.0;
    const Bundle u0 = random_state(g, 7, 3, 1.0).pack();
    StepperConfig cfg;
    cfg.t_end = 0.5;
    cfg.dt = 1.0;
    const Bundle exact = integrate(build_example_split(g, eps, beta), u0, cfg).final_state;
    const SplitOperator split = build_example_split(g, eps, beta, StiffOptions{false});
    std::vector<double> errors;
    for (double dt : {0.02, 0.01, 0.005}) {
      cfg.dt = dt;
      errors.push_back(l2_diff(integrate(split, u0, cfg).final_state, exact));
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
      const double ratio = errors[i - 1] / errors[i];
      CHECK(ratio >= 8.0);
      CHECK(ratio <= 32.0);
    }
    // The IMEX alternative is third order.
    cfg.scheme = Scheme::imex_ars443;
    std::vector<double> imex;
    for (double dt : {0.02, 0.01}) {
      cfg.dt = dt;
      imex.push_back(l2_diff(integrate(split, u0, cfg).final_state, exact));
    }
    CHECK(std::log2(imex[0] / imex[1]) >= 2.7);
  }

  TEST_CASE("blow-up is reported") {
    const auto g = make_grid(1, 16);
    const SplitOperator split(g, 1, [](std::size_t) { return Eigen::MatrixXcd::Constant(1, 1, 5.0); });
    StepperConfig cfg;
    cfg.t_end = 10.0;
    cfg.dt = 0.1;
    cfg.blowup_threshold = 1e3;
    CHECK_THROWS_AS(integrate(split, {Field::constant(g, 1.0)}, cfg), BlowUpError);
    CHECK_THROWS_AS(Stepper(split, Scheme::erk4_exponential).step(0.0, {Field(g)}, 0.0), std::invalid_argument);
  }

  TEST_CASE("single-mode wave matches the analytic solution") {
    const auto g = make_grid(2, 16);
    const Field one = Field::constant(g, 1.0);
    const Field u0 = Field::from_function(g, [](std::span<const double> x) { return std::cos(3.0 * x[0] + 4.0 * x[1]); });
    const double period = 2.0 * std::numbers::pi / 5.0;
    for (double b_ref : {1.0, 0.8}) {
      const auto coef = WaveCoefficients::stationary(one, one, 1.0, b_ref);
      StepperConfig cfg;
      cfg.t_end = period;
      cfg.dt = b_ref == 1.0 ? period : 1e-3;
      const auto tr = integrate(build_wave_split(g, 1.0, coef), WaveState{u0, Field(g)}.pack(), cfg);
      CHECK((tr.final_state[0] - u0).max_abs() <= 1e-8);
      CHECK(tr.final_state[1].max_abs() <= 1e-8 * 5.0);
    }
  }

  TEST_CASE("wave energy is conserved for stationary coefficients") {
    const auto g = make_grid(1, 64);
    const Field a = Field::from_function(g, [](std::span<const double> x) { return 1.0 + 0.3 * std::cos(x[0]); });
    const Field b = Field::from_function(g, [](std::span<const double> x) { return 1.0 + 0.2 * std::sin(x[0]); });
    const auto coef = WaveCoefficients::stationary(a, b, 1.0, 1.0);
    const double eps = 0.5;
    const WaveState s0{random_band_limited_field(8, g, 6, 0.0, 1.0), Field(g)};
    StepperConfig cfg;
    cfg.t_end = 1.0;
    cfg.dt = 2e-3;
    const auto tr = integrate(build_wave_split(g, eps, coef), s0.pack(), cfg);
    const double e0 = wave_energy(s0, eps, a, b);
    CHECK(std::abs(wave_energy(WaveState::unpack(tr.final_state), eps, a, b) - e0) <= 1e-8 * e0);
  }
}
