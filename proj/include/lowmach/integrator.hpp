#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowmach/state.hpp"

namespace lowmach {

enum class Scheme { erk4_exponential, imex_ars443 };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct StepperConfig {
  Scheme scheme = Scheme::erk4_exponential;
  /// Requested step; integrate() shrinks it so that t_end is hit exactly.
  double dt = 1e-3;
  double safety = 0.5;
  double t_end = 1.0;
  double dt_max = 1e-2;
  double blowup_threshold = 1e6;
};

/// Per-mode (components x components) matrix of the stiff linear part.
using SymbolFn = std::function<Eigen::MatrixXcd(std::size_t mode)>;
/// Full right-hand side of a model acting on a packed state.
using RhsFn = std::function<Bundle(double t, const Bundle& u)>;

/// Full model = stiff constant-coefficient part L(xi) + soft remainder.
/// An empty `full_rhs` declares a purely linear constant-coefficient model
/// whose soft part is identically zero.
class SplitOperator {
 public:
  SplitOperator(GridPtr grid, int components, const SymbolFn& stiff_symbol, RhsFn full_rhs = {});

  const GridPtr& grid() const { return grid_; }
  int components() const { return components_; }
  const Eigen::MatrixXcd& symbol(std::size_t mode) const { return symbols_[mode]; }

  bool stiff_only() const { return !rhs_; }
  Bundle full(double t, const Bundle& u) const;
  Bundle apply_stiff(const Bundle& u) const;
  /// full - stiff
  Bundle soft(double t, const Bundle& u) const;

 private:
  GridPtr grid_;
  int components_;
  std::vector<Eigen::MatrixXcd> symbols_;
  RhsFn rhs_;
};

/// Multiplies every mode of `u` by the matching matrix.
Bundle apply_per_mode(const std::vector<Eigen::MatrixXcd>& m, const Bundle& u);

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double time, double max_norm);
  double time() const { return time_; }
  double max_norm() const { return max_norm_; }

 private:
  double time_;
  double max_norm_;
};

/// One-step map for a SplitOperator. Matrix exponentials (or implicit stage
/// inverses) are cached per mode and rebuilt when dt changes. The split must
/// outlive the stepper.
class Stepper {
 public:
  Stepper(const SplitOperator& split, Scheme scheme);

  Bundle step(double t, const Bundle& u, double dt);
  Scheme scheme() const { return scheme_; }

 private:
  void prepare(double dt);
  Bundle step_exponential(double t, const Bundle& u, double dt);
  Bundle step_imex(double t, const Bundle& u, double dt);

  const SplitOperator& split_;
  Scheme scheme_;
  double cached_dt_ = 0.0;
  std::vector<Eigen::MatrixXcd> full_;
  std::vector<Eigen::MatrixXcd> half_;
};

/// safety * min(dx / |v|_inf, 2.5 / soft_rate, dt_max); infinite limits are
/// skipped.
double choose_dt(const Grid& grid, double max_speed, double soft_rate, double safety, double dt_max);

/// Largest physical wavenumber magnitude kept by dealiasing.
double max_resolved_wavenumber(const Grid& grid);

using Monitor = std::function<void(double t, const Bundle& u)>;

struct Trajectory {
  Bundle final_state;
  double final_time = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
};

/// Steps from 0 to config.t_end with a uniform step no larger than
/// config.dt. The initial state is dealiased first. Monitors run at t = 0 and
/// after every step. Throws BlowUpError when a component exceeds the
/// threshold in max norm or becomes non-finite.
Trajectory integrate(const SplitOperator& split, Bundle u0, const StepperConfig& config,
                     const std::vector<Monitor>& monitors = {});

}  // namespace lowmach
