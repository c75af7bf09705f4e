#include "lowmach/gas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lowmach {

double MaterialLaw::operator()(double temperature) const {
  return exponent == 0.0 ? coefficient : coefficient * std::pow(temperature, exponent);
}

double CoefficientSet::beta_derivative(double vartheta) const {
  if (beta_prime) return beta_prime(vartheta);
  const double h = 1e-6;
  return (beta(vartheta + h) - beta(vartheta - h)) / (2.0 * h);
}

CoefficientSet perfect_gas(const PerfectGas& gas) {
  if (!(gas.R > 0.0)) throw std::invalid_argument("gas constant R must be positive");
  if (!(gas.C_V > 0.0)) throw std::invalid_argument("heat capacity C_V must be positive");
  if (!(gas.conductivity.coefficient > 0.0)) throw std::invalid_argument("conductivity must be positive");
  if (!(gas.shear_viscosity.coefficient > 0.0)) throw std::invalid_argument("shear viscosity must be positive");
  const bool same_law = gas.bulk_viscosity.exponent == gas.shear_viscosity.exponent;
  if (!(gas.bulk_viscosity.coefficient >= 0.0 ||
        (same_law && gas.bulk_viscosity.coefficient + gas.shear_viscosity.coefficient > 0.0)))
    throw std::invalid_argument("bulk plus shear viscosity must be positive");

  const double R = gas.R;
  const double CV = gas.C_V;
  const double gamma = gas.gamma();
  const MaterialLaw k = gas.conductivity;
  const MaterialLaw zeta = gas.shear_viscosity;
  const MaterialLaw eta = gas.bulk_viscosity;

  CoefficientSet c;
  c.name = "perfect-gas";
  c.g1 = [gamma](double, double) { return 1.0 / gamma; };
  c.g2 = [R](double th, double) { return std::exp(-th) / R; };
  c.g3 = [R, CV](double, double) { return CV / R; };
  c.chi1 = [gamma](double wp) { return (gamma - 1.0) / (gamma * std::exp(wp)); };
  c.chi2 = [](double wp) { return std::exp(-wp); };
  c.chi3 = [](double wp) { return std::exp(-wp); };
  c.beta = [k](double th) { return k(std::exp(th)) * std::exp(th); };
  c.beta_prime = [k](double th) { return (1.0 + k.exponent) * k(std::exp(th)) * std::exp(th); };
  c.zeta = [zeta](double th) { return zeta(std::exp(th)); };
  c.eta = [eta](double th) { return eta(std::exp(th)); };
  c.entropy = [R, CV, gamma](double th, double wp) { return (CV / R) * th - wp / gamma; };
  c.density = [gamma](double th, double wp) { return (wp - th) / gamma; };
  c.pressure_from_density = [gamma](double th, double rho) { return gamma * rho + th; };
  c.alpha = gas.alpha;
  c.gas = gas;
  return c;
}

const char* to_string(ClauseStatus s) {
  switch (s) {
    case ClauseStatus::pass: return "pass";
    case ClauseStatus::fail: return "fail";
    case ClauseStatus::not_checked: return "not checked";
  }
  return "?";
}

bool ValidationReport::passed() const {
  return std::none_of(clauses.begin(), clauses.end(),
                      [](const ClauseResult& r) { return r.status == ClauseStatus::fail; });
}

namespace {

struct Lattice {
  SampleBox box;
  int n;

  double theta(int i) const { return box.theta_min + (box.theta_max - box.theta_min) * i / (n - 1); }
  double wp(int j) const { return box.wp_min + (box.wp_max - box.wp_min) * j / (n - 1); }
};

// Tracks the smallest sampled value and where it occurred.
struct Worst {
  double value = std::numeric_limits<double>::infinity();
  double theta = 0.0;
  double wp = 0.0;

  void update(double v, double th, double w) {
    if (!(v >= value)) {  // NaN also lands here
      value = v;
      theta = th;
      wp = w;
    }
  }
};

ClauseResult positivity(std::string clause, std::string description, const Worst& w) {
  ClauseResult r{std::move(clause), std::move(description), ClauseStatus::pass, w.value, w.theta, w.wp};
  if (!(w.value > 0.0)) r.status = ClauseStatus::fail;
  return r;
}

ClauseResult identity(std::string clause, std::string description, double tol, const Worst& neg_err) {
  // neg_err tracks -error so that its minimum is the largest error
  ClauseResult r{std::move(clause), std::move(description), ClauseStatus::pass, tol + neg_err.value,
                 neg_err.theta, neg_err.wp};
  if (!(r.worst_margin >= 0.0)) r.status = ClauseStatus::fail;
  return r;
}

double rel_err(double approx, double exact) {
  return std::abs(approx - exact) / std::max(1.0, std::abs(exact));
}

}  // namespace

ValidationReport validate_assumptions(const CoefficientSet& c, const SampleBox& box, int n_samples,
                                      double identity_tolerance) {
  if (n_samples < 100) throw std::invalid_argument("validation needs at least 100 samples per axis");
  const Lattice lat{box, n_samples};
  ValidationReport report;

  Worst g;
  Worst transport;
  Worst chi;
  Worst gap;
  for (int i = 0; i < n_samples; ++i) {
    const double th = lat.theta(i);
    const double b = c.beta(th);
    const double z = c.zeta(th);
    transport.update(std::min({b, z, c.eta(th) + z}), th, 0.0);
    for (int j = 0; j < n_samples; ++j) {
      const double wp = lat.wp(j);
      g.update(std::min({c.g1(th, wp), c.g2(th, wp), c.g3(th, wp)}), th, wp);
    }
  }
  for (int j = 0; j < n_samples; ++j) {
    const double wp = lat.wp(j);
    chi.update(std::min({c.chi1(wp), c.chi2(wp), c.chi3(wp)}), 0.0, wp);
    gap.update(c.chi3(wp) - c.chi1(wp), 0.0, wp);
  }
  report.clauses.push_back(positivity("A1", "g1, g2, g3 > 0", g));
  report.clauses.push_back(positivity("A2", "beta > 0, zeta > 0, eta + zeta > 0", transport));
  report.clauses.push_back(positivity("A3-positivity", "chi1, chi2, chi3 > 0", chi));
  report.clauses.push_back(positivity("A3-gap", "chi1 < chi3", gap));

  const double h = 1e-5;
  auto fd_theta = [h](const Scalar2& f, double th, double wp) {
    return (f(th + h, wp) - f(th - h, wp)) / (2.0 * h);
  };
  auto fd_wp = [h](const Scalar2& f, double th, double wp) {
    return (f(th, wp + h) - f(th, wp - h)) / (2.0 * h);
  };

  if (c.entropy) {
    Worst err;
    err.update(-std::abs(c.entropy(0.0, 0.0)), 0.0, 0.0);
    for (int i = 0; i < n_samples; ++i)
      for (int j = 0; j < n_samples; ++j) {
        const double th = lat.theta(i);
        const double wp = lat.wp(j);
        const double e = std::max(rel_err(fd_theta(c.entropy, th, wp), c.g3(th, wp)),
                                  rel_err(fd_wp(c.entropy, th, wp), -c.g1(th, wp)));
        err.update(-e, th, wp);
      }
    report.clauses.push_back(identity("compat-S", "S(0,0) = 0, dS = g3 dtheta - g1 dwp", identity_tolerance, err));
  } else {
    report.clauses.push_back({"compat-S", "S(0,0) = 0, dS = g3 dtheta - g1 dwp", ClauseStatus::not_checked});
  }

  if (c.density) {
    Worst err;
    err.update(-std::abs(c.density(0.0, 0.0)), 0.0, 0.0);
    Worst delta;
    for (int i = 0; i < n_samples; ++i)
      for (int j = 0; j < n_samples; ++j) {
        const double th = lat.theta(i);
        const double wp = lat.wp(j);
        const double g1 = c.g1(th, wp);
        const double g3 = c.g3(th, wp);
        const double ratio = c.chi1(wp) / c.chi3(wp);
        double e = std::max(rel_err(fd_theta(c.density, th, wp), -ratio * g3),
                            rel_err(fd_wp(c.density, th, wp), g1));
        if (c.pressure_from_density)
          e = std::max(e, rel_err(c.pressure_from_density(th, c.density(th, wp)), wp));
        err.update(-e, th, wp);
        // symmetrizer weights of the (rho, v, theta) formulation
        const double gamma1 = ratio * g3 / g1;
        const double gamma2 = 1.0 / g1;
        const double d1 = gamma1 * c.chi3(wp) / (c.chi3(wp) - c.chi1(wp));
        const double d2 = c.g2(th, wp);
        const double d3 = gamma2 * g3;
        delta.update(std::min({d1, d2, d3}), th, wp);
      }
    report.clauses.push_back(identity("compat-varrho",
                                      "varrho(0,0) = 0, dvarrho = -(chi1/chi3) g3 dtheta + g1 dwp",
                                      identity_tolerance, err));
    report.clauses.push_back(positivity("symmetrizer", "delta1, delta2, delta3 > 0", delta));
  } else {
    report.clauses.push_back({"compat-varrho", "varrho(0,0) = 0, dvarrho = -(chi1/chi3) g3 dtheta + g1 dwp",
                              ClauseStatus::not_checked});
    report.clauses.push_back({"symmetrizer", "delta1, delta2, delta3 > 0", ClauseStatus::not_checked});
  }
  return report;
}

}  // namespace lowmach
