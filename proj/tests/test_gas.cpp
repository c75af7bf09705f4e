#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lowmach/gas.hpp"

using namespace lowmach;

namespace {

const ClauseResult& clause(const ValidationReport& r, const std::string& name) {
  for (const auto& c : r.clauses)
    if (c.clause == name) return c;
  throw std::runtime_error("no clause " + name);
}

}  // namespace

TEST_SUITE("gas_models") {
  TEST_CASE("perfect gas constants") {
    PerfectGas gas;
    gas.R = 1.0;
    gas.C_V = 1.5;
    CHECK(gas.gamma() == doctest::Approx(5.0 / 3.0));
    const auto c = perfect_gas(gas);
    CHECK(c.g1(0.3, -0.2) == doctest::Approx(0.6));
    CHECK(c.g2(0.0, 0.0) == doctest::Approx(1.0));
    CHECK(c.g3(0.0, 0.0) == doctest::Approx(1.5));
    for (double wp : {-1.0, 0.0, 0.7}) CHECK(c.chi1(wp) / c.chi3(wp) == doctest::Approx(0.4));
    CHECK(c.beta(0.0) == doctest::Approx(1.0));
    CHECK(c.entropy(0.0, 0.0) == 0.0);
    CHECK(c.density(0.0, 0.0) == 0.0);
  }

  TEST_CASE("perfect gas preconditions") {
    PerfectGas gas;
    gas.R = 0.0;
    CHECK_THROWS_AS(perfect_gas(gas), std::invalid_argument);
    gas.R = 1.0;
    gas.C_V = -1.0;
    CHECK_THROWS_AS(perfect_gas(gas), std::invalid_argument);
  }

  TEST_CASE("material laws") {
    const MaterialLaw law{2.0, 0.5};
    CHECK(law(4.0) == doctest::Approx(4.0));
    PerfectGas gas;
    gas.conductivity = {1.0, 0.7};
    const auto c = perfect_gas(gas);
    // beta = k(e^theta) e^theta = e^{1.7 theta}
    CHECK(c.beta(0.4) == doctest::Approx(std::exp(1.7 * 0.4)));
    const double h = 1e-5;
    CHECK(c.beta_derivative(0.4) == doctest::Approx((c.beta(0.4 + h) - c.beta(0.4 - h)) / (2 * h)).epsilon(1e-8));
  }

  TEST_CASE("closed-form potentials satisfy the compatibility identities") {
    for (double cv : {1.5, 2.5, 4.0}) {
      PerfectGas gas;
      gas.C_V = cv;
      const auto c = perfect_gas(gas);
      const double h = 1e-4;
      for (double th = -1.0; th <= 1.0; th += 0.25)
        for (double wp = -1.0; wp <= 1.0; wp += 0.25) {
          const double dS_dth = (c.entropy(th + h, wp) - c.entropy(th - h, wp)) / (2 * h);
          const double dS_dwp = (c.entropy(th, wp + h) - c.entropy(th, wp - h)) / (2 * h);
          const double dr_dth = (c.density(th + h, wp) - c.density(th - h, wp)) / (2 * h);
          const double dr_dwp = (c.density(th, wp + h) - c.density(th, wp - h)) / (2 * h);
          CHECK(std::abs(dS_dth - c.g3(th, wp)) < 1e-10);
          CHECK(std::abs(dS_dwp + c.g1(th, wp)) < 1e-10);
          CHECK(std::abs(dr_dth + c.chi1(wp) / c.chi3(wp) * c.g3(th, wp)) < 1e-10);
          CHECK(std::abs(dr_dwp - c.g1(th, wp)) < 1e-10);
          CHECK(c.pressure_from_density(th, c.density(th, wp)) == doctest::Approx(wp));
        }
    }
  }

  TEST_CASE("validator accepts the perfect gas") {
    const auto report = validate_assumptions(perfect_gas(PerfectGas{}), SampleBox{}, 100, 1e-6);
    CHECK(report.passed());
    for (const auto& c : report.clauses) CHECK_MESSAGE(c.status == ClauseStatus::pass, c.clause);
    CHECK(clause(report, "A3-gap").worst_margin > 0.0);
    CHECK_THROWS_AS(validate_assumptions(perfect_gas(PerfectGas{}), SampleBox{}, 50), std::invalid_argument);
  }

  TEST_CASE("validator rejects chi1 equal to chi3 with zero margin") {
    auto c = perfect_gas(PerfectGas{});
    c.chi1 = c.chi3;
    const auto report = validate_assumptions(c);
    CHECK_FALSE(report.passed());
    const auto& gap = clause(report, "A3-gap");
    CHECK(gap.status == ClauseStatus::fail);
    CHECK(gap.worst_margin == 0.0);
  }

  TEST_CASE("validator reports missing potentials as not checked") {
    auto c = perfect_gas(PerfectGas{});
    c.entropy = {};
    c.density = {};
    const auto report = validate_assumptions(c);
    CHECK(report.passed());
    CHECK(clause(report, "compat-S").status == ClauseStatus::not_checked);
    CHECK(clause(report, "compat-varrho").status == ClauseStatus::not_checked);
    CHECK(std::string(to_string(ClauseStatus::not_checked)) == "not checked");
  }

  TEST_CASE("validator locates a failing sample") {
    auto c = perfect_gas(PerfectGas{});
    c.g3 = [](double th, double) { return th - 0.5; };
    const auto report = validate_assumptions(c);
    const auto& a1 = clause(report, "A1");
    CHECK(a1.status == ClauseStatus::fail);
    CHECK(a1.at_theta == doctest::Approx(-1.0));
    CHECK(a1.worst_margin == doctest::Approx(-1.5));
  }

  TEST_CASE("validator catches a wrong potential") {
    auto c = perfect_gas(PerfectGas{});
    c.entropy = [](double th, double wp) { return 2.0 * th - wp; };
    const auto report = validate_assumptions(c);
    CHECK(clause(report, "compat-S").status == ClauseStatus::fail);
  }
}
