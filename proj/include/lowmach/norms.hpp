#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lowmach/state.hpp"

namespace lowmach {

/// Parameter triple a = (eps, mu, kappa) with eps in (0,1], mu, kappa in [0,1].
class ParamTriple {
 public:
  ParamTriple(double eps, double mu, double kappa);

  double eps() const { return eps_; }
  double mu() const { return mu_; }
  double kappa() const { return kappa_; }
  /// sqrt(mu + kappa)
  double nu() const;

 private:
  double eps_;
  double mu_;
  double kappa_;
};

/// (sum_k <k>^{2 sigma} |c_k|^2)^{1/2}
double sobolev_norm(const Field& u, double sigma);
/// Euclidean combination of the component norms.
double sobolev_norm(std::span<const Field> u, double sigma);

/// ||u||_{H^{sigma-1}} + rho ||u||_{H^sigma}
double weighted_norm(const Field& u, double sigma, double rho);
double weighted_norm(std::span<const Field> u, double sigma, double rho);

/// ||(p, v)||_{H^{s+1}_{eps nu}} + ||theta||_{H^{s+1}_{nu}}
double state_bracket(const FlowState& u, const ParamTriple& a, double s);

/// mu ||grad v||^2_{H^{s+1}_{eps nu}} + kappa ||grad theta||^2_{H^{s+1}_{nu}}
///   + kappa ||div v||^2_{H^s} + (mu + kappa) ||grad p||^2_{H^s}
double dissipation_integrand(const FlowState& u, const ParamTriple& a, double s);

/// Initial-data norm: the instantaneous bracket.
double initial_norm(const FlowState& u, const ParamTriple& a, double s);

/// Running sup-plus-integral norm over recorded times. The sup is the max
/// over recorded samples and the integral uses the trapezoid rule.
class CompositeNormAccumulator {
 public:
  CompositeNormAccumulator(ParamTriple a, double s);

  void record(double t, const FlowState& u);

  double value() const;
  double sup_term() const { return sup_; }
  double integral_term() const { return integral_; }
  double last_time() const { return last_time_; }
  std::size_t samples() const { return samples_; }
  const ParamTriple& params() const { return params_; }
  double order() const { return s_; }

 private:
  ParamTriple params_;
  double s_;
  double sup_ = 0.0;
  double integral_ = 0.0;
  double last_time_ = 0.0;
  double last_integrand_ = 0.0;
  std::size_t samples_ = 0;
};

struct NormReport {
  double time = 0.0;
  /// (label, value) pairs, e.g. ("p_H4", 0.3)
  std::vector<std::pair<std::string, double>> h_sigma;
  double composite = 0.0;
  double split_low = 0.0;
  double split_high = 0.0;
};

/// Applies J_{eps nu} and I - J_{eps nu} to every component and returns both
/// instantaneous brackets. When eps nu = 0 the low part is the whole state.
NormReport frequency_split_report(const FlowState& u, const ParamTriple& a, double s);

/// Component-wise J_h.
FlowState mollify(const FlowState& u, double h);

}  // namespace lowmach
