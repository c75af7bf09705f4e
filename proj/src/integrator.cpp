#include "lowmach/integrator.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace lowmach {

const char* to_string(Scheme s) {
  return s == Scheme::erk4_exponential ? "erk4" : "ars443";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "erk4" || name == "erk4_exponential") return Scheme::erk4_exponential;
  if (name == "ars443" || name == "imex_ars443") return Scheme::imex_ars443;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected erk4 or ars443)");
}

SplitOperator::SplitOperator(GridPtr grid, int components, const SymbolFn& stiff_symbol, RhsFn full_rhs)
    : grid_(std::move(grid)), components_(components), rhs_(std::move(full_rhs)) {
  symbols_.reserve(grid_->size());
  for (std::size_t i = 0; i < grid_->size(); ++i) {
    symbols_.push_back(stiff_symbol(i));
    if (symbols_.back().rows() != components || symbols_.back().cols() != components)
      throw std::invalid_argument("stiff symbol has the wrong shape");
  }
}

Bundle apply_per_mode(const std::vector<Eigen::MatrixXcd>& m, const Bundle& u) {
  const std::size_t c = u.size();
  Bundle out = zeros_like(u);
  std::vector<std::span<const Complex>> src;
  std::vector<std::span<Complex>> dst;
  for (std::size_t k = 0; k < c; ++k) {
    src.push_back(u[k].coeffs());
    dst.push_back(out[k].coeffs());
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Eigen::MatrixXcd& mi = m[i];
    for (std::size_t r = 0; r < c; ++r) {
      Complex acc = 0.0;
      for (std::size_t k = 0; k < c; ++k)
        acc += mi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) * src[k][i];
      dst[r][i] = acc;
    }
  }
  return out;
}

Bundle SplitOperator::apply_stiff(const Bundle& u) const {
  if (static_cast<int>(u.size()) != components_) throw std::invalid_argument("state has wrong component count");
  return apply_per_mode(symbols_, u);
}

Bundle SplitOperator::full(double t, const Bundle& u) const {
  return rhs_ ? rhs_(t, u) : apply_stiff(u);
}

Bundle SplitOperator::soft(double t, const Bundle& u) const {
  if (!rhs_) return zeros_like(u);
  Bundle f = rhs_(t, u);
  return axpy(f, -1.0, apply_stiff(u));
}

BlowUpError::BlowUpError(double time, double max_norm)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "blow-up at t = " << time << ": max norm " << max_norm;
        return os.str();
      }()),
      time_(time),
      max_norm_(max_norm) {}

Stepper::Stepper(const SplitOperator& split, Scheme scheme) : split_(split), scheme_(scheme) {}

void Stepper::prepare(double dt) {
  if (dt == cached_dt_ && !full_.empty()) return;
  const std::size_t n = split_.grid()->size();
  full_.resize(n);
  half_.resize(n);
  const auto c = static_cast<Eigen::Index>(split_.components());
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(c, c);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::MatrixXcd& L = split_.symbol(i);
    if (scheme_ == Scheme::erk4_exponential) {
      if (L.isZero(0.0)) {
        full_[i] = id;
        half_[i] = id;
      } else {
        full_[i] = (dt * L).exp();
        half_[i] = (0.5 * dt * L).exp();
      }
    } else {
      full_[i] = (id - 0.5 * dt * L).inverse();
    }
  }
  cached_dt_ = dt;
}

Bundle Stepper::step(double t, const Bundle& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  prepare(dt);
  return scheme_ == Scheme::erk4_exponential ? step_exponential(t, u, dt) : step_imex(t, u, dt);
}

Bundle Stepper::step_exponential(double t, const Bundle& u, double h) {
  if (split_.stiff_only()) return apply_per_mode(full_, u);
  const Bundle k1 = split_.soft(t, u);
  const Bundle eu_half = apply_per_mode(half_, u);

  Bundle s2 = eu_half;
  axpy(s2, 0.5 * h, apply_per_mode(half_, k1));
  const Bundle k2 = split_.soft(t + 0.5 * h, s2);

  Bundle s3 = eu_half;
  axpy(s3, 0.5 * h, k2);
  const Bundle k3 = split_.soft(t + 0.5 * h, s3);

  const Bundle eu = apply_per_mode(full_, u);
  Bundle s4 = eu;
  axpy(s4, h, apply_per_mode(half_, k3));
  const Bundle k4 = split_.soft(t + h, s4);

  Bundle mid = k2;
  axpy(mid, 1.0, k3);
  Bundle out = eu;
  axpy(out, h / 6.0, apply_per_mode(full_, k1));
  axpy(out, h / 3.0, apply_per_mode(half_, mid));
  axpy(out, h / 6.0, k4);
  return out;
}

namespace {

// ARS(4,4,3): explicit stage 0 followed by four singly diagonally implicit
// stages with diagonal 1/2; stiffly accurate, so the update is the last stage.
constexpr double ars_ae[4][4] = {
    {1.0 / 2.0, 0.0, 0.0, 0.0},
    {11.0 / 18.0, 1.0 / 18.0, 0.0, 0.0},
    {5.0 / 6.0, -5.0 / 6.0, 1.0 / 2.0, 0.0},
    {1.0 / 4.0, 7.0 / 4.0, 3.0 / 4.0, -7.0 / 4.0},
};
constexpr double ars_ai[4][4] = {
    {1.0 / 2.0, 0.0, 0.0, 0.0},
    {1.0 / 6.0, 1.0 / 2.0, 0.0, 0.0},
    {-1.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0, 0.0},
    {3.0 / 2.0, -3.0 / 2.0, 1.0 / 2.0, 1.0 / 2.0},
};
constexpr double ars_c[5] = {0.0, 1.0 / 2.0, 2.0 / 3.0, 1.0 / 2.0, 1.0};

}  // namespace

Bundle Stepper::step_imex(double t, const Bundle& u, double h) {
  std::vector<Bundle> explicit_k;
  std::vector<Bundle> implicit_k;
  explicit_k.push_back(split_.soft(t, u));
  Bundle y = u;
  for (int i = 0; i < 4; ++i) {
    Bundle r = u;
    for (int j = 0; j <= i; ++j) axpy(r, h * ars_ae[i][j], explicit_k[static_cast<std::size_t>(j)]);
    for (int j = 0; j < i; ++j) axpy(r, h * ars_ai[i][j], implicit_k[static_cast<std::size_t>(j)]);
    y = apply_per_mode(full_, r);
    implicit_k.push_back(split_.apply_stiff(y));
    if (i < 3) explicit_k.push_back(split_.soft(t + ars_c[i + 1] * h, y));
  }
  return y;
}

double max_resolved_wavenumber(const Grid& grid) {
  return grid.scale() * grid.dealias_cutoff() * std::sqrt(static_cast<double>(grid.dim()));
}

double choose_dt(const Grid& grid, double max_speed, double soft_rate, double safety, double dt_max) {
  if (!(safety > 0.0)) throw std::invalid_argument("safety factor must be positive");
  if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
  double dt = dt_max;
  if (max_speed > 0.0) dt = std::min(dt, grid.spacing() / max_speed);
  if (soft_rate > 0.0) dt = std::min(dt, 2.5 / soft_rate);
  return safety * dt;
}

namespace {

void check_finite(double t, const Bundle& u, double threshold) {
  // sum |c_k| bounds the max norm from above, so the transform is only needed
  // when the bound is inconclusive.
  double bound = 0.0;
  for (const auto& f : u) {
    double s = 0.0;
    for (const Complex& c : f.coeffs()) s += std::abs(c);
    bound = std::max(bound, s);
  }
  if (bound <= threshold) return;
  const double m = max_abs(u);
  if (!(m <= threshold)) throw BlowUpError(t, m);
}

}  // namespace

Trajectory integrate(const SplitOperator& split, Bundle u0, const StepperConfig& config,
                     const std::vector<Monitor>& monitors) {
  if (!(config.t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
  if (!(config.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  for (auto& f : u0) dealias_in_place(f.coeffs(), f.grid());

  Trajectory tr;
  for (const auto& m : monitors) m(0.0, u0);
  if (config.t_end == 0.0) {
    tr.final_state = std::move(u0);
    return tr;
  }
  const auto steps = static_cast<std::size_t>(std::ceil(config.t_end / config.dt - 1e-9));
  const double dt = config.t_end / static_cast<double>(steps);
  Stepper stepper(split, config.scheme);
  Bundle u = std::move(u0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = n * dt;
    u = stepper.step(t, u, dt);
    const double t_next = (n + 1 == steps) ? config.t_end : (n + 1) * dt;
    check_finite(t_next, u, config.blowup_threshold);
    for (const auto& m : monitors) m(t_next, u);
  }
  tr.final_state = std::move(u);
  tr.final_time = config.t_end;
  tr.dt = dt;
  tr.steps = steps;
  return tr;
}

}  // namespace lowmach
