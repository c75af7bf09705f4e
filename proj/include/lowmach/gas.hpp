#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lowmach {

using Scalar1 = std::function<double(double)>;
using Scalar2 = std::function<double(double, double)>;

/// coefficient * T^exponent
struct MaterialLaw {
  double coefficient = 1.0;
  double exponent = 0.0;

  double operator()(double temperature) const;
};

/// Perfect gas P = R rho T, e = C_V T, with temperature-dependent transport
/// laws. Reference pressure and temperature are 1.
struct PerfectGas {
  double R = 1.0;
  double C_V = 2.5;
  MaterialLaw conductivity{1.0, 0.0};
  MaterialLaw shear_viscosity{1.0, 0.0};
  MaterialLaw bulk_viscosity{0.0, 0.0};
  double alpha = 1.0;

  double gamma() const { return 1.0 + R / C_V; }
};

/// Coefficient functions of the fluctuation system. Two-argument maps take
/// (vartheta, wp), the placeholders for (theta, eps p).
struct CoefficientSet {
  std::string name;
  Scalar2 g1, g2, g3;
  Scalar1 chi1, chi2, chi3;
  Scalar1 beta, zeta, eta;
  /// d beta / d vartheta; finite differences are used when empty.
  Scalar1 beta_prime;
  /// Optional compatibility potentials S and varrho, and wp recovered from
  /// (vartheta, varrho).
  Scalar2 entropy;
  Scalar2 density;
  Scalar2 pressure_from_density;
  /// Exponent of eps in the viscous heating eps^alpha mu sigma.Dv.
  double alpha = 1.0;
  /// Present when the set was built by perfect_gas().
  std::optional<PerfectGas> gas;

  double beta_derivative(double vartheta) const;
};

CoefficientSet perfect_gas(const PerfectGas& gas);

struct SampleBox {
  double theta_min = -1.0;
  double theta_max = 1.0;
  double wp_min = -1.0;
  double wp_max = 1.0;
};

enum class ClauseStatus { pass, fail, not_checked };

const char* to_string(ClauseStatus s);

struct ClauseResult {
  std::string clause;
  std::string description;
  ClauseStatus status = ClauseStatus::not_checked;
  /// Positivity clauses: smallest sampled value of the quantity that must be
  /// positive. Identity clauses: tolerance minus the largest relative error.
  double worst_margin = 0.0;
  double at_theta = 0.0;
  double at_wp = 0.0;
};

struct ValidationReport {
  std::vector<ClauseResult> clauses;
  bool passed() const;
};

/// Samples the structural positivity conditions and the compatibility
/// identities dS = g3 dtheta - g1 dwp, dvarrho = -(chi1/chi3) g3 dtheta + g1 dwp
/// on an n_samples x n_samples lattice over `box`.
ValidationReport validate_assumptions(const CoefficientSet& c, const SampleBox& box = {},
                                      int n_samples = 100, double identity_tolerance = 1e-6);

}  // namespace lowmach
