#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "lowmach/io.hpp"

using namespace lowmach;

namespace {

SweepConfig small_sweep() {
  SweepConfig c;
  c.points = 16;
  c.eps_list = {0.5, 0.25};
  c.mu_list = {0.0, 1.0};
  c.kappa_list = {1.0};
  c.t_end = 0.05;
  return c;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("log-log slope") {
    CHECK(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), std::invalid_argument);
  }

  TEST_CASE("report bookkeeping") {
    ExperimentReport r;
    CHECK(r.passed());
    r.add_check("a", true, 1.0, 2.0);
    r.add_check("b", false, 3.0, 2.0);
    CHECK_FALSE(r.passed());
    REQUIRE(r.find_check("b"));
    CHECK(r.find_check("b")->value == 3.0);
    CHECK(r.find_check("c") == nullptr);
  }

  TEST_CASE("drivers are deterministic") {
    const SweepConfig c = small_sweep();
    const auto a = run_uniform_sweep(c);
    const auto b = run_uniform_sweep(c);
    CHECK(to_csv(a.columns, a.rows) == to_csv(b.columns, b.rows));
    CHECK(a.passed());

    Example42Config e;
    e.points = 16;
    e.t_end = 0.1;
    const auto x = run_example42(e);
    const auto y = run_example42(e);
    CHECK(to_csv(x.columns, x.rows) == to_csv(y.columns, y.rows));
  }

  TEST_CASE("sweep table does not depend on the order of the parameter lists") {
    SweepConfig c = small_sweep();
    const auto a = run_uniform_sweep(c);
    std::reverse(c.eps_list.begin(), c.eps_list.end());
    std::reverse(c.mu_list.begin(), c.mu_list.end());
    const auto b = run_uniform_sweep(c);
    CHECK(to_csv(a.columns, a.rows) == to_csv(b.columns, b.rows));
  }

  TEST_CASE("zero initial data gives a zero composite norm") {
    SweepConfig c = small_sweep();
    c.m0 = 0.0;
    const auto r = run_uniform_sweep(c);
    CHECK(r.passed());
    for (const auto& row : r.rows) CHECK(row[3] == 0.0);
  }

  TEST_CASE("invalid driver input is rejected") {
    SweepConfig c = small_sweep();
    c.eps_list = {0.0};
    CHECK_THROWS_AS(run_uniform_sweep(c), std::invalid_argument);
    LinearizedConfig l;
    l.eps_list.clear();
    CHECK_THROWS_AS(run_linearized_probe(l), std::invalid_argument);
  }

  TEST_CASE("model validation report") {
    const auto r = run_validate_model(PerfectGas{}, SampleBox{}, 100);
    CHECK(r.passed());
    CHECK(r.rows.size() == r.checks.size());
  }
}
