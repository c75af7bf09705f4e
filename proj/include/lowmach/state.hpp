#pragma once

#include <vector>

#include "lowmach/spectral.hpp"

namespace lowmach {

/// Flat list of component fields; the representation the time integrator sees.
using Bundle = std::vector<Field>;

Bundle& axpy(Bundle& y, double a, const Bundle& x);
Bundle add(const Bundle& a, const Bundle& b);
Bundle scaled(const Bundle& a, double s);
Bundle zeros_like(const Bundle& a);
double max_abs(const Bundle& b);

/// Pressure fluctuation, velocity and temperature fluctuation (p, v, theta).
/// Also used for their time derivatives.
struct FlowState {
  Field p;
  std::vector<Field> v;
  Field theta;

  static FlowState zero(const GridPtr& grid);
  const GridPtr& grid_ptr() const { return p.grid_ptr(); }
  int dim() const { return p.grid().dim(); }
  Bundle pack() const;
  static FlowState unpack(const Bundle& b);
};

/// Pressure, velocity and temperature in physical units (P, v, T), P,T > 0.
struct PrimitiveState {
  Field P;
  std::vector<Field> v;
  Field T;

  Bundle pack() const;
  static PrimitiveState unpack(const Bundle& b);
};

/// (rho, v, theta) with rho = varrho(theta, eps p).
struct SymmetrizedState {
  Field rho;
  std::vector<Field> v;
  Field theta;

  Bundle pack() const;
  static SymmetrizedState unpack(const Bundle& b);
};

/// Velocity and temperature of the incompressible-type limit system.
struct LimitState {
  std::vector<Field> v;
  Field theta;

  Bundle pack() const;
  static LimitState unpack(const Bundle& b);
};

/// Second-order wave equation as a first-order pair (u, w = du/dt).
struct WaveState {
  Field u;
  Field w;

  Bundle pack() const { return {u, w}; }
  static WaveState unpack(const Bundle& b) { return {b.at(0), b.at(1)}; }
};

}  // namespace lowmach
