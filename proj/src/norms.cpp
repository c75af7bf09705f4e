#include "lowmach/norms.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lowmach {

ParamTriple::ParamTriple(double eps, double mu, double kappa) : eps_(eps), mu_(mu), kappa_(kappa) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must lie in (0, 1]");
  if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("mu must lie in [0, 1]");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in [0, 1]");
}

double ParamTriple::nu() const { return std::sqrt(mu_ + kappa_); }

namespace {

double squared_sobolev(const Field& u, double sigma) {
  const Grid& g = u.grid();
  auto c = u.coeffs();
  double s = 0.0;
  if (sigma == 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) s += std::norm(c[i]);
  } else {
    for (std::size_t i = 0; i < g.size(); ++i)
      s += std::pow(1.0 + g.wavenumber_norm2(i), sigma) * std::norm(c[i]);
  }
  return s;
}

std::vector<Field> velocity_gradient(const std::vector<Field>& v) {
  std::vector<Field> out;
  for (const auto& vi : v)
    for (auto& d : grad(vi)) out.push_back(std::move(d));
  return out;
}

}  // namespace

double sobolev_norm(const Field& u, double sigma) { return std::sqrt(squared_sobolev(u, sigma)); }

double sobolev_norm(std::span<const Field> u, double sigma) {
  double s = 0.0;
  for (const auto& f : u) s += squared_sobolev(f, sigma);
  return std::sqrt(s);
}

double weighted_norm(const Field& u, double sigma, double rho) {
  if (rho < 0.0) throw std::invalid_argument("weight must be nonnegative");
  const double low = sobolev_norm(u, sigma - 1.0);
  return rho == 0.0 ? low : low + rho * sobolev_norm(u, sigma);
}

double weighted_norm(std::span<const Field> u, double sigma, double rho) {
  if (rho < 0.0) throw std::invalid_argument("weight must be nonnegative");
  const double low = sobolev_norm(u, sigma - 1.0);
  return rho == 0.0 ? low : low + rho * sobolev_norm(u, sigma);
}

double state_bracket(const FlowState& u, const ParamTriple& a, double s) {
  std::vector<Field> pv;
  pv.reserve(u.v.size() + 1);
  pv.push_back(u.p);
  for (const auto& f : u.v) pv.push_back(f);
  return weighted_norm(pv, s + 1.0, a.eps() * a.nu()) + weighted_norm(u.theta, s + 1.0, a.nu());
}

double dissipation_integrand(const FlowState& u, const ParamTriple& a, double s) {
  const double en = a.eps() * a.nu();
  double total = 0.0;
  if (a.mu() > 0.0) {
    const double n = weighted_norm(velocity_gradient(u.v), s + 1.0, en);
    total += a.mu() * n * n;
  }
  if (a.kappa() > 0.0) {
    const double nt = weighted_norm(grad(u.theta), s + 1.0, a.nu());
    const double nd = sobolev_norm(div(u.v), s);
    total += a.kappa() * (nt * nt + nd * nd);
  }
  if (a.mu() + a.kappa() > 0.0) {
    const double np = sobolev_norm(grad(u.p), s);
    total += (a.mu() + a.kappa()) * np * np;
  }
  return total;
}

double initial_norm(const FlowState& u, const ParamTriple& a, double s) {
  return state_bracket(u, a, s);
}

CompositeNormAccumulator::CompositeNormAccumulator(ParamTriple a, double s) : params_(a), s_(s) {}

void CompositeNormAccumulator::record(double t, const FlowState& u) {
  if (samples_ > 0 && t < last_time_)
    throw std::invalid_argument("recording time " + std::to_string(t) + " precedes last time " +
                                std::to_string(last_time_));
  const double bracket = state_bracket(u, params_, s_);
  const double integrand = dissipation_integrand(u, params_, s_);
  if (samples_ == 0) {
    sup_ = bracket;
  } else {
    sup_ = std::max(sup_, bracket);
    integral_ += 0.5 * (t - last_time_) * (integrand + last_integrand_);
  }
  last_integrand_ = integrand;
  last_time_ = t;
  ++samples_;
}

double CompositeNormAccumulator::value() const { return sup_ + std::sqrt(integral_); }

namespace {

Field apply_cutoff(const Field& u, double h, bool high) {
  const Grid& g = u.grid();
  Field out(u.grid_ptr());
  auto in = u.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double j = cutoff_profile(h * std::sqrt(g.wavenumber_norm2(i)));
    dst[i] = (high ? 1.0 - j : j) * in[i];
  }
  return out;
}

FlowState split(const FlowState& u, double h, bool high) {
  FlowState out{apply_cutoff(u.p, h, high), {}, apply_cutoff(u.theta, h, high)};
  for (const auto& f : u.v) out.v.push_back(apply_cutoff(f, h, high));
  return out;
}

}  // namespace

FlowState mollify(const FlowState& u, double h) { return split(u, h, false); }

NormReport frequency_split_report(const FlowState& u, const ParamTriple& a, double s) {
  NormReport r;
  const double order = s + 1.0;
  const std::string tag = "_H" + std::to_string(static_cast<int>(std::lround(order)));
  r.h_sigma.emplace_back("p" + tag, sobolev_norm(u.p, order));
  r.h_sigma.emplace_back("v" + tag, sobolev_norm(u.v, order));
  r.h_sigma.emplace_back("theta" + tag, sobolev_norm(u.theta, order));
  r.composite = state_bracket(u, a, s);
  const double h = a.eps() * a.nu();
  if (h == 0.0) {
    r.split_low = r.composite;
    r.split_high = 0.0;
  } else {
    r.split_low = state_bracket(split(u, h, false), a, s);
    r.split_high = state_bracket(split(u, h, true), a, s);
  }
  return r;
}

}  // namespace lowmach
