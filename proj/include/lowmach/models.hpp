#pragma once

#include <functional>

#include "lowmach/gas.hpp"
#include "lowmach/integrator.hpp"
#include "lowmach/norms.hpp"

namespace lowmach {

// ---------------------------------------------------------------------------
// Fluctuation system in (p, v, theta)

struct RhsOptions {
  bool advection = true;
  bool heating = true;
};

/// Tendencies of
///   g1 (dp/dt + v.grad p) + div v / eps - (kappa/eps) chi1 div(beta grad theta) = chi1 F
///   g2 (dv/dt + v.grad v) + grad p / eps - mu chi2 div(sigma) = 0
///   g3 (dtheta/dt + v.grad theta) + div v - kappa chi3 div(beta grad theta) = eps chi3 F
/// with sigma = 2 zeta Dv + eta div v I, F = eps^alpha mu sigma:Dv and all
/// coefficients evaluated at (theta, eps p).
FlowState rhs_main(const FlowState& u, const ParamTriple& a, const CoefficientSet& c,
                   const RhsOptions& options = {});

struct StiffOptions {
  /// Keep the reference-state viscous and conductive terms in the stiff part.
  bool diffusion = true;
};

/// Linearization of rhs_main at the reference state, per Fourier mode.
SymbolFn main_stiff_symbol(const GridPtr& grid, const ParamTriple& a, const CoefficientSet& c,
                           const StiffOptions& options = {});
SplitOperator build_main_split(const GridPtr& grid, const ParamTriple& a, const CoefficientSet& c,
                               const RhsOptions& rhs_options = {}, const StiffOptions& stiff_options = {});
/// Bound on the frequency of the explicit remainder for state u.
double main_soft_rate(const FlowState& u, const ParamTriple& a, const CoefficientSet& c,
                      const StiffOptions& options = {});
double max_speed(const std::vector<Field>& v);

// ---------------------------------------------------------------------------
// Primitive variables (P, v, T) of a perfect gas

PrimitiveState rhs_primitive(const PrimitiveState& u, const ParamTriple& a, const PerfectGas& gas);
SymbolFn primitive_stiff_symbol(const GridPtr& grid, const ParamTriple& a, const PerfectGas& gas);
SplitOperator build_primitive_split(const GridPtr& grid, const ParamTriple& a, const PerfectGas& gas);

/// p = log(P / Pbar) / eps, theta = log(T / Tbar), pointwise on the grid.
FlowState to_fluctuation(const PrimitiveState& u, double eps, double p_ref = 1.0, double t_ref = 1.0);
PrimitiveState from_fluctuation(const FlowState& u, double eps, double p_ref = 1.0, double t_ref = 1.0);

// ---------------------------------------------------------------------------
// Constant-coefficient example system
//   dp/dt = (-div v + Laplacian theta) / eps, dv/dt = -grad p / eps,
//   dtheta/dt = -div v + beta Laplacian theta,   beta > 1.

FlowState rhs_example(const FlowState& u, double eps, double beta);
/// With options.diffusion = false only the grad/div penalization blocks are
/// stiff and the Laplacian terms are left to the explicit remainder.
SymbolFn example_symbol(const GridPtr& grid, double eps, double beta, const StiffOptions& options = {});
SplitOperator build_example_split(const GridPtr& grid, double eps, double beta,
                                  const StiffOptions& options = {});

// ---------------------------------------------------------------------------
// Limit system
//   div v = kappa chi1(0) div(beta grad theta)
//   g2(theta,0) (dv/dt + v.grad v) + grad pi - mu B2(theta,0) v = 0
//   g3(theta,0) (dtheta/dt + v.grad theta) - kappa (chi3 - chi1)(0) div(beta grad theta) = 0

struct LimitTendency {
  LimitState rate;
  Field pi;
  int cg_iterations = 0;
  double cg_residual = 0.0;
};

/// Relative L2 defect of the divergence constraint.
double limit_constraint_defect(const LimitState& u, double kappa, const CoefficientSet& c);

/// Throws std::domain_error when the constraint defect exceeds
/// `constraint_tolerance`; pass infinity to skip the check.
LimitTendency rhs_limit(const LimitState& u, double mu, double kappa, const CoefficientSet& c,
                        double constraint_tolerance = 1e-8);
SymbolFn limit_stiff_symbol(const GridPtr& grid, double mu, double kappa, const CoefficientSet& c);
SplitOperator build_limit_split(const GridPtr& grid, double mu, double kappa, const CoefficientSet& c);
double limit_soft_rate(const LimitState& u, double mu, double kappa, const CoefficientSet& c);

/// Replaces v by v + grad phi so that the divergence constraint holds, and
/// returns the corrected state.
LimitState project_to_constraint(const LimitState& u, double kappa, const CoefficientSet& c);

// ---------------------------------------------------------------------------
// Symmetrized formulation in (rho, v, theta), rho = varrho(theta, eps p)

SymmetrizedState rhs_symmetrized(const SymmetrizedState& u, const ParamTriple& a, const CoefficientSet& c);
SymbolFn symmetrized_stiff_symbol(const GridPtr& grid, const ParamTriple& a, const CoefficientSet& c);
SplitOperator build_symmetrized_split(const GridPtr& grid, const ParamTriple& a, const CoefficientSet& c);
SymmetrizedState to_symmetrized(const FlowState& u, double eps, const CoefficientSet& c);
FlowState from_symmetrized(const SymmetrizedState& u, double eps, const CoefficientSet& c);

// ---------------------------------------------------------------------------
// Wave equation eps^2 d/dt(a du/dt) - div(b grad u) = c

struct WaveCoefficients {
  std::function<Field(double)> a;
  std::function<Field(double)> b;
  /// da/dt; zero when empty.
  std::function<Field(double)> a_dot;
  /// Source c; zero when empty.
  std::function<Field(double)> forcing;
  double floor = 1e-3;
  /// Constant reference values used by the stiff part.
  double a_ref = 1.0;
  double b_ref = 1.0;

  static WaveCoefficients stationary(const Field& a, const Field& b, double a_ref, double b_ref);
};

WaveState rhs_wave(double t, const WaveState& u, double eps, const WaveCoefficients& coef);
SymbolFn wave_stiff_symbol(const GridPtr& grid, double eps, const WaveCoefficients& coef);
SplitOperator build_wave_split(const GridPtr& grid, double eps, const WaveCoefficients& coef);
double wave_soft_rate(const Grid& grid, double eps, const WaveCoefficients& coef, double t = 0.0);
/// (1/2) mean of a (eps w)^2 + b |grad u|^2
double wave_energy(const WaveState& u, double eps, const Field& a, const Field& b);

// ---------------------------------------------------------------------------
// Linearized system with frozen coefficients (time independent)
//   g1 (dp/dt + vbar.grad p) + div v / eps - (kappa/eps) div(beta1 grad theta) = 0
//   g2 (dv/dt + vbar.grad v) + grad p / eps - mu (beta2 Laplacian v + beta2s grad div v) = 0
//   g3 (dtheta/dt + vbar.grad theta) + div v - kappa div(beta3 grad theta) = 0

struct FrozenCoefficients {
  Field g1, g2, g3;
  Field beta1, beta2, beta2_sharp, beta3;
  std::vector<Field> vbar;
};

/// Coefficients of the linearization around (p, v, theta) = (0, vbar, theta_bar).
FrozenCoefficients freeze_coefficients(const Field& theta_bar, const std::vector<Field>& vbar,
                                       const CoefficientSet& c);
FlowState rhs_linearized(const FlowState& u, const FrozenCoefficients& f, const ParamTriple& a);
SplitOperator build_linearized_split(const GridPtr& grid, const FrozenCoefficients& f, const ParamTriple& a);
double linearized_soft_rate(const FrozenCoefficients& f, const ParamTriple& a);

// ---------------------------------------------------------------------------
// Structural checks

/// S(phi) U = (gamma1 div v, grad(gamma1 zeta) + grad(gamma2 theta), gamma2 div v)
/// acting on U = (zeta, v, theta).
FlowState apply_skew_penalization(const Field& gamma1, const Field& gamma2, const FlowState& u);

/// -<zeta Laplacian u + eta grad div u, u>
double viscous_form(const Field& zeta, const Field& eta, const std::vector<Field>& u);

}  // namespace lowmach
