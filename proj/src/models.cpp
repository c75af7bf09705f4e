#include "lowmach/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lowmach {

namespace {

using Values = std::vector<double>;
using Eigen::MatrixXcd;

Field to_field(const GridPtr& g, const Values& v) {
  Field f = Field::from_values(g, v);
  dealias_in_place(f.coeffs(), f.grid());
  return f;
}

std::vector<Values> values_of(const std::vector<Field>& fs) {
  std::vector<Values> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(f.values());
  return out;
}

std::vector<Values> gradient_values(const Field& u) { return values_of(grad(u)); }

// dv[i][j] = d_j v_i
std::vector<std::vector<Values>> velocity_gradient(const std::vector<Field>& v) {
  std::vector<std::vector<Values>> out;
  for (const auto& vi : v) out.push_back(gradient_values(vi));
  return out;
}

Values divergence_values(const std::vector<std::vector<Values>>& dv, std::size_t n) {
  Values d(n, 0.0);
  for (std::size_t i = 0; i < dv.size(); ++i)
    for (std::size_t x = 0; x < n; ++x) d[x] += dv[i][i][x];
  return d;
}

// v . grad f, pointwise
Values advect(const std::vector<Values>& v, const std::vector<Values>& df) {
  Values out(df[0].size(), 0.0);
  for (std::size_t j = 0; j < v.size(); ++j)
    for (std::size_t x = 0; x < out.size(); ++x) out[x] += v[j][x] * df[j][x];
  return out;
}

// div(weight grad u) with the flux dealiased before differentiation
Field conductive_term(const Field& u, const Values& weight) {
  auto gu = gradient_values(u);
  std::vector<Field> flux;
  for (auto& component : gu) {
    for (std::size_t x = 0; x < component.size(); ++x) component[x] *= weight[x];
    flux.push_back(to_field(u.grid_ptr(), component));
  }
  return div(flux);
}

struct ViscousTerms {
  std::vector<Values> div_sigma;
  /// sigma : Dv = 2 zeta |Dv|^2 + eta (div v)^2
  Values dissipation;
};

ViscousTerms viscous_terms(const GridPtr& g, const std::vector<std::vector<Values>>& dv, const Values& zeta,
                           const Values& eta) {
  const std::size_t d = dv.size();
  const std::size_t n = g->size();
  const Values divv = divergence_values(dv, n);
  ViscousTerms out;
  out.dissipation.assign(n, 0.0);
  std::vector<std::vector<Field>> sigma(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      Values s(n);
      for (std::size_t x = 0; x < n; ++x) {
        const double strain = 0.5 * (dv[i][j][x] + dv[j][i][x]);
        s[x] = 2.0 * zeta[x] * strain + (i == j ? eta[x] * divv[x] : 0.0);
        out.dissipation[x] += s[x] * strain;
      }
      sigma[i].push_back(to_field(g, s));
    }
  for (std::size_t i = 0; i < d; ++i) out.div_sigma.push_back(div(sigma[i]).values());
  return out;
}

Values sample1(const Scalar1& f, const Values& x) {
  Values out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

double max_deviation(const Values& x, double ref) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v - ref));
  return m;
}

std::size_t dim_of(const GridPtr& g) { return static_cast<std::size_t>(g->dim()); }

Eigen::VectorXcd derivative_vector(const Grid& g, std::size_t mode) {
  Eigen::VectorXcd D(g.dim());
  for (int a = 0; a < g.dim(); ++a) D(a) = derivative_symbol(g, mode, a);
  return D;
}

struct ReferenceCoefficients {
  double g1, g2, g3, chi1, chi2, chi3, beta, zeta, eta;
};

ReferenceCoefficients reference(const CoefficientSet& c) {
  return {c.g1(0.0, 0.0), c.g2(0.0, 0.0), c.g3(0.0, 0.0), c.chi1(0.0), c.chi2(0.0),
          c.chi3(0.0),    c.beta(0.0),    c.zeta(0.0),    c.eta(0.0)};
}

// Viscous block mu (b2 Laplacian delta_ij + b2s D_i D_j) / g
void add_viscous_block(MatrixXcd& L, Eigen::Index offset, const Eigen::VectorXcd& D, double lap, double scale,
                       double b2, double b2s) {
  const Eigen::Index d = D.size();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      L(offset + i, offset + j) += scale * ((i == j ? b2 * lap : 0.0) + b2s * D(i) * D(j));
}

}  // namespace

double max_speed(const std::vector<Field>& v) {
  if (v.empty()) return 0.0;
  const auto vals = values_of(v);
  double m = 0.0;
  for (std::size_t x = 0; x < vals[0].size(); ++x) {
    double s = 0.0;
    for (const auto& c : vals) s += c[x] * c[x];
    m = std::max(m, std::sqrt(s));
  }
  return m;
}

// ---------------------------------------------------------------------------

FlowState rhs_main(const FlowState& u, const ParamTriple& a, const CoefficientSet& c, const RhsOptions& options) {
  const GridPtr& g = u.grid_ptr();
  const std::size_t n = g->size();
  const std::size_t d = dim_of(g);
  const double eps = a.eps();
  const double mu = a.mu();
  const double kappa = a.kappa();

  const Values p = u.p.values();
  const Values th = u.theta.values();
  const auto v = values_of(u.v);
  const auto dp = gradient_values(u.p);
  const auto dth = gradient_values(u.theta);
  const auto dv = velocity_gradient(u.v);
  const Values divv = divergence_values(dv, n);

  Values g1(n), g2(n), g3(n), chi1(n), chi2(n), chi3(n);
  for (std::size_t x = 0; x < n; ++x) {
    const double wp = eps * p[x];
    g1[x] = c.g1(th[x], wp);
    g2[x] = c.g2(th[x], wp);
    g3[x] = c.g3(th[x], wp);
    chi1[x] = c.chi1(wp);
    chi2[x] = c.chi2(wp);
    chi3[x] = c.chi3(wp);
  }

  Values heat(n, 0.0);
  if (kappa > 0.0) heat = conductive_term(u.theta, sample1(c.beta, th)).values();

  ViscousTerms visc;
  Values F(n, 0.0);
  if (mu > 0.0) {
    visc = viscous_terms(g, dv, sample1(c.zeta, th), sample1(c.eta, th));
    if (options.heating) {
      const double factor = std::pow(eps, c.alpha) * mu;
      for (std::size_t x = 0; x < n; ++x) F[x] = factor * visc.dissipation[x];
    }
  }

  Values out_p(n), out_th(n);
  std::vector<Values> out_v(d, Values(n));
  for (std::size_t x = 0; x < n; ++x) {
    out_p[x] = (-divv[x] / eps + (kappa / eps) * chi1[x] * heat[x] + chi1[x] * F[x]) / g1[x];
    out_th[x] = (-divv[x] + kappa * chi3[x] * heat[x] + eps * chi3[x] * F[x]) / g3[x];
    for (std::size_t i = 0; i < d; ++i) {
      double force = -dp[i][x] / eps;
      if (mu > 0.0) force += mu * chi2[x] * visc.div_sigma[i][x];
      out_v[i][x] = force / g2[x];
    }
  }
  if (options.advection) {
    const Values ap = advect(v, dp);
    const Values at = advect(v, dth);
    for (std::size_t x = 0; x < n; ++x) {
      out_p[x] -= ap[x];
      out_th[x] -= at[x];
    }
    for (std::size_t i = 0; i < d; ++i) {
      const Values av = advect(v, dv[i]);
      for (std::size_t x = 0; x < n; ++x) out_v[i][x] -= av[x];
    }
  }

  FlowState out{to_field(g, out_p), {}, to_field(g, out_th)};
  for (const auto& f : out_v) out.v.push_back(to_field(g, f));
  return out;
}

SymbolFn main_stiff_symbol(const GridPtr& grid, const ParamTriple& a, const CoefficientSet& c,
                           const StiffOptions& options) {
  const ReferenceCoefficients r = reference(c);
  return [grid, a, r, options](std::size_t mode) {
    const Grid& g = *grid;
    const Eigen::Index d = g.dim();
    const double eps = a.eps();
    const Eigen::VectorXcd D = derivative_vector(g, mode);
    const double lap = laplacian_symbol(g, mode);
    MatrixXcd L = MatrixXcd::Zero(d + 2, d + 2);
    const Eigen::Index th = d + 1;
    for (Eigen::Index j = 0; j < d; ++j) {
      L(0, 1 + j) = -D(j) / (eps * r.g1);
      L(1 + j, 0) = -D(j) / (eps * r.g2);
      L(th, 1 + j) = -D(j) / r.g3;
    }
    if (options.diffusion) {
      L(0, th) = (a.kappa() / eps) * r.chi1 * r.beta * lap / r.g1;
      L(th, th) = a.kappa() * r.chi3 * r.beta * lap / r.g3;
      if (a.mu() > 0.0)
        add_viscous_block(L, 1, D, lap, a.mu() * r.chi2 / r.g2, r.zeta, r.zeta + r.eta);
    }
    return L;
  };
}

SplitOperator build_main_split(const GridPtr& grid, const ParamTriple& a, const CoefficientSet& c,
                               const RhsOptions& rhs_options, const StiffOptions& stiff_options) {
  return SplitOperator(grid, grid->dim() + 2, main_stiff_symbol(grid, a, c, stiff_options),
                       [a, c, rhs_options](double, const Bundle& u) {
                         return rhs_main(FlowState::unpack(u), a, c, rhs_options).pack();
                       });
}

double main_soft_rate(const FlowState& u, const ParamTriple& a, const CoefficientSet& c,
                      const StiffOptions& options) {
  const ReferenceCoefficients r = reference(c);
  const std::size_t n = u.p.grid().size();
  const double eps = a.eps();
  const Values p = u.p.values();
  const Values th = u.theta.values();
  Values inv_g1(n), inv_g2(n), inv_g3(n), heat_p(n), heat_t(n), shear(n), bulk(n);
  for (std::size_t x = 0; x < n; ++x) {
    const double wp = eps * p[x];
    const double g1 = c.g1(th[x], wp);
    const double g2 = c.g2(th[x], wp);
    const double g3 = c.g3(th[x], wp);
    const double beta = c.beta(th[x]);
    const double zeta = c.zeta(th[x]);
    inv_g1[x] = 1.0 / g1;
    inv_g2[x] = 1.0 / g2;
    inv_g3[x] = 1.0 / g3;
    heat_p[x] = c.chi1(wp) * beta / g1;
    heat_t[x] = c.chi3(wp) * beta / g3;
    shear[x] = c.chi2(wp) * zeta / g2;
    bulk[x] = c.chi2(wp) * (zeta + c.eta(th[x])) / g2;
  }
  const double diff = options.diffusion ? 1.0 : 0.0;
  const double k = max_resolved_wavenumber(u.p.grid());
  // Entrywise bounds of the remainder acting on (p, v, theta); the spectral
  // radius of this nonnegative matrix bounds that of the remainder.
  Eigen::Matrix3d b = Eigen::Matrix3d::Zero();
  b(0, 1) = k * max_deviation(inv_g1, 1.0 / r.g1) / eps;
  b(0, 2) = k * k * (a.kappa() / eps) * max_deviation(heat_p, diff * r.chi1 * r.beta / r.g1);
  b(1, 0) = k * max_deviation(inv_g2, 1.0 / r.g2) / eps;
  b(1, 1) = k * k * a.mu() *
            (max_deviation(shear, diff * r.chi2 * r.zeta / r.g2) +
             max_deviation(bulk, diff * r.chi2 * (r.zeta + r.eta) / r.g2));
  b(2, 1) = k * max_deviation(inv_g3, 1.0 / r.g3);
  b(2, 2) = k * k * a.kappa() * max_deviation(heat_t, diff * r.chi3 * r.beta / r.g3);
  return Eigen::EigenSolver<Eigen::Matrix3d>(b, false).eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

PrimitiveState rhs_primitive(const PrimitiveState& u, const ParamTriple& a, const PerfectGas& gas) {
  const GridPtr& g = u.P.grid_ptr();
  const std::size_t n = g->size();
  const std::size_t d = dim_of(g);
  const double eps = a.eps();
  const double gamma = gas.gamma();
  const Values P = u.P.values();
  const Values T = u.T.values();
  for (std::size_t x = 0; x < n; ++x)
    if (!(P[x] > 0.0) || !(T[x] > 0.0)) throw std::domain_error("pressure and temperature must be positive");

  const auto v = values_of(u.v);
  const auto dP = gradient_values(u.P);
  const auto dT = gradient_values(u.T);
  const auto dv = velocity_gradient(u.v);
  const Values divv = divergence_values(dv, n);

  Values heat(n, 0.0);
  if (a.kappa() > 0.0) {
    Values k(n);
    for (std::size_t x = 0; x < n; ++x) k[x] = gas.conductivity(T[x]);
    heat = conductive_term(u.T, k).values();
  }
  ViscousTerms visc;
  Values Q(n, 0.0);
  if (a.mu() > 0.0) {
    Values zeta(n), eta(n);
    for (std::size_t x = 0; x < n; ++x) {
      zeta[x] = gas.shear_viscosity(T[x]);
      eta[x] = gas.bulk_viscosity(T[x]);
    }
    visc = viscous_terms(g, dv, zeta, eta);
    const double factor = std::pow(eps, gas.alpha) * a.mu();
    for (std::size_t x = 0; x < n; ++x) Q[x] = factor * visc.dissipation[x];
  }

  const Values aP = advect(v, dP);
  const Values aT = advect(v, dT);
  Values out_P(n), out_T(n);
  std::vector<Values> out_v(d, Values(n));
  for (std::size_t x = 0; x < n; ++x) {
    const double rho = P[x] / (gas.R * T[x]);
    out_P[x] = -aP[x] - gamma * P[x] * divv[x] + (gamma - 1.0) * (a.kappa() * heat[x] + eps * Q[x]);
    out_T[x] = -aT[x] + (-P[x] * divv[x] + a.kappa() * heat[x] + eps * Q[x]) / (rho * gas.C_V);
    for (std::size_t i = 0; i < d; ++i) {
      double force = -dP[i][x] / (eps * eps);
      if (a.mu() > 0.0) force += a.mu() * visc.div_sigma[i][x];
      out_v[i][x] = force / rho;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    const Values av = advect(v, dv[i]);
    for (std::size_t x = 0; x < n; ++x) out_v[i][x] -= av[x];
  }
  PrimitiveState out{to_field(g, out_P), {}, to_field(g, out_T)};
  for (const auto& f : out_v) out.v.push_back(to_field(g, f));
  return out;
}

SymbolFn primitive_stiff_symbol(const GridPtr& grid, const ParamTriple& a, const PerfectGas& gas) {
  return [grid, a, gas](std::size_t mode) {
    const Grid& g = *grid;
    const Eigen::Index d = g.dim();
    const double eps = a.eps();
    const double gamma = gas.gamma();
    const double R = gas.R;
    const Eigen::VectorXcd D = derivative_vector(g, mode);
    const double lap = laplacian_symbol(g, mode);
    const Eigen::Index T = d + 1;
    MatrixXcd L = MatrixXcd::Zero(d + 2, d + 2);
    for (Eigen::Index j = 0; j < d; ++j) {
      L(0, 1 + j) = -gamma * D(j);
      L(1 + j, 0) = -R * D(j) / (eps * eps);
      L(T, 1 + j) = -(R / gas.C_V) * D(j);
    }
    const double k1 = gas.conductivity(1.0);
    L(0, T) = (gamma - 1.0) * a.kappa() * k1 * lap;
    L(T, T) = (R / gas.C_V) * a.kappa() * k1 * lap;
    if (a.mu() > 0.0) {
      const double z = gas.shear_viscosity(1.0);
      add_viscous_block(L, 1, D, lap, a.mu() * R, z, z + gas.bulk_viscosity(1.0));
    }
    return L;
  };
}

SplitOperator build_primitive_split(const GridPtr& grid, const ParamTriple& a, const PerfectGas& gas) {
  return SplitOperator(grid, grid->dim() + 2, primitive_stiff_symbol(grid, a, gas),
                       [a, gas](double, const Bundle& u) {
                         return rhs_primitive(PrimitiveState::unpack(u), a, gas).pack();
                       });
}

FlowState to_fluctuation(const PrimitiveState& u, double eps, double p_ref, double t_ref) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(p_ref > 0.0) || !(t_ref > 0.0)) throw std::invalid_argument("reference values must be positive");
  const GridPtr& g = u.P.grid_ptr();
  Values P = u.P.values();
  Values T = u.T.values();
  for (std::size_t x = 0; x < P.size(); ++x) {
    if (!(P[x] > 0.0) || !(T[x] > 0.0)) throw std::domain_error("pressure and temperature must be positive");
    P[x] = std::log(P[x] / p_ref) / eps;
    T[x] = std::log(T[x] / t_ref);
  }
  return {Field::from_values(g, P), u.v, Field::from_values(g, T)};
}

PrimitiveState from_fluctuation(const FlowState& u, double eps, double p_ref, double t_ref) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(p_ref > 0.0) || !(t_ref > 0.0)) throw std::invalid_argument("reference values must be positive");
  const GridPtr& g = u.p.grid_ptr();
  Values p = u.p.values();
  Values th = u.theta.values();
  for (std::size_t x = 0; x < p.size(); ++x) {
    p[x] = p_ref * std::exp(eps * p[x]);
    th[x] = t_ref * std::exp(th[x]);
  }
  return {Field::from_values(g, p), u.v, Field::from_values(g, th)};
}

// ---------------------------------------------------------------------------

namespace {

void require_beta(double beta) {
  if (!(beta > 1.0)) throw std::invalid_argument("example system needs beta > 1");
}

}  // namespace

FlowState rhs_example(const FlowState& u, double eps, double beta) {
  require_beta(beta);
  const Field dv = div(u.v);
  const Field lt = laplacian(u.theta);
  FlowState out{(lt - dv) * (1.0 / eps), {}, beta * lt - dv};
  for (const auto& gp : grad(u.p)) out.v.push_back(gp * (-1.0 / eps));
  return out;
}

SymbolFn example_symbol(const GridPtr& grid, double eps, double beta, const StiffOptions& options) {
  require_beta(beta);
  return [grid, eps, beta, options](std::size_t mode) {
    const Grid& g = *grid;
    const Eigen::Index d = g.dim();
    const Eigen::VectorXcd D = derivative_vector(g, mode);
    const double lap = laplacian_symbol(g, mode);
    const Eigen::Index th = d + 1;
    MatrixXcd L = MatrixXcd::Zero(d + 2, d + 2);
    for (Eigen::Index j = 0; j < d; ++j) {
      L(0, 1 + j) = -D(j) / eps;
      L(1 + j, 0) = -D(j) / eps;
      L(th, 1 + j) = -D(j);
    }
    if (options.diffusion) {
      L(0, th) = lap / eps;
      L(th, th) = beta * lap;
    }
    return L;
  };
}

SplitOperator build_example_split(const GridPtr& grid, double eps, double beta, const StiffOptions& options) {
  if (options.diffusion) return SplitOperator(grid, grid->dim() + 2, example_symbol(grid, eps, beta, options));
  return SplitOperator(grid, grid->dim() + 2, example_symbol(grid, eps, beta, options),
                       [eps, beta](double, const Bundle& u) {
                         return rhs_example(FlowState::unpack(u), eps, beta).pack();
                       });
}

// ---------------------------------------------------------------------------

namespace {

// Solves div(w grad pi) = b for mean-free pi by conjugate gradients on
// A pi = -div(w grad pi), preconditioned with the inverse of -mean(w) Laplacian.
struct CgResult {
  Field pi;
  int iterations = 0;
  double residual = 0.0;
};

CgResult solve_variable_poisson(const Field& weight, const Field& b, double tol = 1e-10, int max_iter = 1000) {
  const GridPtr& g = b.grid_ptr();
  const Values w = weight.values();
  const double wbar = weight.mean();
  auto A = [&](const Field& x) { return -conductive_term(x, w); };
  auto M = [&](const Field& r) {
    Field z(g);
    auto src = r.coeffs();
    auto dst = z.coeffs();
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double lap = laplacian_symbol(*g, i);
      dst[i] = (lap != 0.0 && g->kept_by_dealias(i)) ? src[i] / (-wbar * lap) : Complex(0.0);
    }
    return z;
  };

  CgResult res{Field(g)};
  Field r = -b;  // residual of A pi = -b at pi = 0
  const double bnorm = std::sqrt(inner(b, b));
  if (bnorm == 0.0) return res;
  Field z = M(r);
  Field p = z;
  double rz = inner(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    const Field Ap = A(p);
    const double alpha = rz / inner(p, Ap);
    res.pi += alpha * p;
    r -= alpha * Ap;
    res.iterations = it;
    res.residual = std::sqrt(inner(r, r)) / bnorm;
    if (res.residual <= tol) return res;
    z = M(r);
    const double rz_new = inner(r, z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  throw std::runtime_error("pressure solve did not converge");
}

}  // namespace

double limit_constraint_defect(const LimitState& u, double kappa, const CoefficientSet& c) {
  Field defect = div(u.v);
  if (kappa > 0.0) {
    const Field h = conductive_term(u.theta, sample1(c.beta, u.theta.values()));
    defect -= (kappa * c.chi1(0.0)) * h;
  }
  const double scale = std::max(1.0, sobolev_norm(u.v, 1.0));
  return std::sqrt(inner(defect, defect)) / scale;
}

LimitTendency rhs_limit(const LimitState& u, double mu, double kappa, const CoefficientSet& c,
                        double constraint_tolerance) {
  if (!(mu >= 0.0 && mu <= 1.0) || !(kappa >= 0.0 && kappa <= 1.0))
    throw std::invalid_argument("mu and kappa must lie in [0, 1]");
  const double defect = limit_constraint_defect(u, kappa, c);
  if (defect > constraint_tolerance)
    throw std::domain_error("state violates the divergence constraint (defect " + std::to_string(defect) + ")");

  const GridPtr& g = u.theta.grid_ptr();
  const std::size_t n = g->size();
  const std::size_t d = dim_of(g);
  const ReferenceCoefficients r = reference(c);

  const Values th = u.theta.values();
  const auto v = values_of(u.v);
  const auto dth = gradient_values(u.theta);
  const auto dv = velocity_gradient(u.v);
  Values inv_g2(n), inv_g3(n), beta(n);
  for (std::size_t x = 0; x < n; ++x) {
    inv_g2[x] = 1.0 / c.g2(th[x], 0.0);
    inv_g3[x] = 1.0 / c.g3(th[x], 0.0);
    beta[x] = c.beta(th[x]);
  }

  // temperature equation
  Values heat(n, 0.0);
  if (kappa > 0.0) heat = conductive_term(u.theta, beta).values();
  const Values at = advect(v, dth);
  Values rate_th(n);
  for (std::size_t x = 0; x < n; ++x)
    rate_th[x] = -at[x] + kappa * (r.chi3 - r.chi1) * heat[x] * inv_g3[x];
  const Field theta_dot = to_field(g, rate_th);

  // momentum without the pressure gradient
  ViscousTerms visc;
  if (mu > 0.0) visc = viscous_terms(g, dv, sample1(c.zeta, th), sample1(c.eta, th));
  std::vector<Field> m;
  for (std::size_t i = 0; i < d; ++i) {
    Values mi = advect(v, dv[i]);
    for (std::size_t x = 0; x < n; ++x) {
      mi[x] = -mi[x];
      if (mu > 0.0) mi[x] += mu * r.chi2 * visc.div_sigma[i][x] * inv_g2[x];
    }
    m.push_back(to_field(g, mi));
  }

  // d/dt of kappa chi1(0) div(beta grad theta)
  Field constraint_rate(g);
  if (kappa > 0.0) {
    const Values tdot = theta_dot.values();
    const auto dtdot = gradient_values(theta_dot);
    std::vector<Field> flux;
    for (std::size_t j = 0; j < d; ++j) {
      Values f(n);
      for (std::size_t x = 0; x < n; ++x)
        f[x] = c.beta_derivative(th[x]) * tdot[x] * dth[j][x] + beta[x] * dtdot[j][x];
      flux.push_back(to_field(g, f));
    }
    constraint_rate = (kappa * r.chi1) * div(flux);
  }

  const Field rhs = div(m) - constraint_rate;
  CgResult cg = solve_variable_poisson(to_field(g, inv_g2), rhs);

  LimitTendency out{LimitState{{}, theta_dot}, cg.pi, cg.iterations, cg.residual};
  const auto dpi = gradient_values(cg.pi);
  for (std::size_t i = 0; i < d; ++i) {
    Values gp(n);
    for (std::size_t x = 0; x < n; ++x) gp[x] = inv_g2[x] * dpi[i][x];
    out.rate.v.push_back(m[i] - to_field(g, gp));
  }
  return out;
}

SymbolFn limit_stiff_symbol(const GridPtr& grid, double mu, double kappa, const CoefficientSet& c) {
  const ReferenceCoefficients r = reference(c);
  return [grid, mu, kappa, r](std::size_t mode) {
    const Grid& g = *grid;
    const Eigen::Index d = g.dim();
    const Eigen::VectorXcd D = derivative_vector(g, mode);
    const double lap = laplacian_symbol(g, mode);
    const double a_theta = kappa * (r.chi3 - r.chi1) * r.beta / r.g3;
    const double nu_v = mu * r.chi2 * r.zeta / r.g2;
    const double slave = kappa * r.chi1 * r.beta;
    MatrixXcd L = MatrixXcd::Zero(d + 1, d + 1);
    L(d, d) = a_theta * lap;
    if (lap != 0.0) {
      // (I - D D^T / lap) projects onto divergence-free modes
      MatrixXcd P = MatrixXcd::Identity(d, d) - D * D.transpose() / lap;
      L.topLeftCorner(d, d) = nu_v * lap * P;
      L.block(0, d, d, 1) = slave * a_theta * lap * D;
    }
    return L;
  };
}

SplitOperator build_limit_split(const GridPtr& grid, double mu, double kappa, const CoefficientSet& c) {
  return SplitOperator(grid, grid->dim() + 1, limit_stiff_symbol(grid, mu, kappa, c),
                       [mu, kappa, c](double, const Bundle& u) {
                         return rhs_limit(LimitState::unpack(u), mu, kappa, c,
                                          std::numeric_limits<double>::infinity())
                             .rate.pack();
                       });
}

double limit_soft_rate(const LimitState& u, double mu, double kappa, const CoefficientSet& c) {
  const ReferenceCoefficients r = reference(c);
  const Values th = u.theta.values();
  Values shear(th.size()), heat(th.size());
  for (std::size_t x = 0; x < th.size(); ++x) {
    shear[x] = r.chi2 * c.zeta(th[x]) / c.g2(th[x], 0.0);
    heat[x] = (r.chi3 - r.chi1) * c.beta(th[x]) / c.g3(th[x], 0.0);
  }
  const double k = max_resolved_wavenumber(u.theta.grid());
  const double slave = 1.0 + kappa * r.chi1 * r.beta;
  return k * k * (mu * max_deviation(shear, r.chi2 * r.zeta / r.g2) +
                  slave * kappa * max_deviation(heat, (r.chi3 - r.chi1) * r.beta / r.g3));
}

LimitState project_to_constraint(const LimitState& u, double kappa, const CoefficientSet& c) {
  const GridPtr& g = u.theta.grid_ptr();
  Field target(g);
  if (kappa > 0.0)
    target = (kappa * c.chi1(0.0)) * conductive_term(u.theta, sample1(c.beta, u.theta.values()));
  const Field mismatch = target - div(u.v);
  Field phi(g);
  auto src = mismatch.coeffs();
  auto dst = phi.coeffs();
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double lap = laplacian_symbol(*g, i);
    dst[i] = lap != 0.0 ? src[i] / lap : Complex(0.0);
  }
  if (std::abs(mismatch.coeffs()[0]) > 1e-12 * (1.0 + std::sqrt(inner(mismatch, mismatch))))
    throw std::domain_error("divergence constraint has nonzero mean");
  LimitState out{{}, u.theta};
  const auto gphi = grad(phi);
  for (std::size_t i = 0; i < u.v.size(); ++i) out.v.push_back(u.v[i] + gphi[i]);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void require_density(const CoefficientSet& c) {
  if (!c.density || !c.pressure_from_density)
    throw std::invalid_argument("coefficient set '" + c.name + "' provides no density map");
}

}  // namespace

SymmetrizedState rhs_symmetrized(const SymmetrizedState& u, const ParamTriple& a, const CoefficientSet& c) {
  require_density(c);
  const GridPtr& g = u.rho.grid_ptr();
  const std::size_t n = g->size();
  const std::size_t d = dim_of(g);
  const double eps = a.eps();
  const double mu = a.mu();
  const double kappa = a.kappa();

  const Values rho = u.rho.values();
  const Values th = u.theta.values();
  const auto v = values_of(u.v);
  const auto drho = gradient_values(u.rho);
  const auto dth = gradient_values(u.theta);
  const auto dv = velocity_gradient(u.v);
  const Values divv = divergence_values(dv, n);

  Values heat(n, 0.0);
  if (kappa > 0.0) heat = conductive_term(u.theta, sample1(c.beta, th)).values();
  ViscousTerms visc;
  if (mu > 0.0) visc = viscous_terms(g, dv, sample1(c.zeta, th), sample1(c.eta, th));
  const double heating = std::pow(eps, c.alpha) * mu;

  const Values arho = advect(v, drho);
  const Values ath = advect(v, dth);
  Values out_rho(n), out_th(n);
  std::vector<Values> out_v(d, Values(n));
  for (std::size_t x = 0; x < n; ++x) {
    const double wp = c.pressure_from_density(th[x], rho[x]);
    const double g1 = c.g1(th[x], wp);
    const double g2 = c.g2(th[x], wp);
    const double g3 = c.g3(th[x], wp);
    const double chi1 = c.chi1(wp);
    const double chi2 = c.chi2(wp);
    const double chi3 = c.chi3(wp);
    const double gamma1 = chi1 * g3 / (chi3 * g1);
    const double gamma2 = 1.0 / g1;
    const double F = mu > 0.0 ? heating * visc.dissipation[x] : 0.0;
    out_rho[x] = -arho[x] - ((chi3 - chi1) / chi3) * divv[x];
    out_th[x] = -ath[x] + (-divv[x] + kappa * chi3 * heat[x] + eps * chi3 * F) / g3;
    for (std::size_t i = 0; i < d; ++i) {
      double force = -(gamma1 * dth[i][x] + gamma2 * drho[i][x]) / (eps * eps);
      if (mu > 0.0) force += mu * chi2 * visc.div_sigma[i][x];
      out_v[i][x] = force / g2;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    const Values av = advect(v, dv[i]);
    for (std::size_t x = 0; x < n; ++x) out_v[i][x] -= av[x];
  }
  SymmetrizedState out{to_field(g, out_rho), {}, to_field(g, out_th)};
  for (const auto& f : out_v) out.v.push_back(to_field(g, f));
  return out;
}

SymbolFn symmetrized_stiff_symbol(const GridPtr& grid, const ParamTriple& a, const CoefficientSet& c) {
  require_density(c);
  const ReferenceCoefficients r = reference(c);
  return [grid, a, r](std::size_t mode) {
    const Grid& g = *grid;
    const Eigen::Index d = g.dim();
    const double eps = a.eps();
    const Eigen::VectorXcd D = derivative_vector(g, mode);
    const double lap = laplacian_symbol(g, mode);
    const double gamma1 = r.chi1 * r.g3 / (r.chi3 * r.g1);
    const double gamma2 = 1.0 / r.g1;
    const Eigen::Index th = d + 1;
    MatrixXcd L = MatrixXcd::Zero(d + 2, d + 2);
    for (Eigen::Index j = 0; j < d; ++j) {
      L(0, 1 + j) = -((r.chi3 - r.chi1) / r.chi3) * D(j);
      L(1 + j, 0) = -gamma2 * D(j) / (eps * eps * r.g2);
      L(1 + j, th) = -gamma1 * D(j) / (eps * eps * r.g2);
      L(th, 1 + j) = -D(j) / r.g3;
    }
    L(th, th) = a.kappa() * r.chi3 * r.beta * lap / r.g3;
    if (a.mu() > 0.0) add_viscous_block(L, 1, D, lap, a.mu() * r.chi2 / r.g2, r.zeta, r.zeta + r.eta);
    return L;
  };
}

SplitOperator build_symmetrized_split(const GridPtr& grid, const ParamTriple& a, const CoefficientSet& c) {
  return SplitOperator(grid, grid->dim() + 2, symmetrized_stiff_symbol(grid, a, c),
                       [a, c](double, const Bundle& u) {
                         return rhs_symmetrized(SymmetrizedState::unpack(u), a, c).pack();
                       });
}

SymmetrizedState to_symmetrized(const FlowState& u, double eps, const CoefficientSet& c) {
  require_density(c);
  const GridPtr& g = u.p.grid_ptr();
  Values p = u.p.values();
  const Values th = u.theta.values();
  for (std::size_t x = 0; x < p.size(); ++x) p[x] = c.density(th[x], eps * p[x]);
  return {Field::from_values(g, p), u.v, u.theta};
}

FlowState from_symmetrized(const SymmetrizedState& u, double eps, const CoefficientSet& c) {
  require_density(c);
  const GridPtr& g = u.rho.grid_ptr();
  Values rho = u.rho.values();
  const Values th = u.theta.values();
  for (std::size_t x = 0; x < rho.size(); ++x) rho[x] = c.pressure_from_density(th[x], rho[x]) / eps;
  return {Field::from_values(g, rho), u.v, u.theta};
}

// ---------------------------------------------------------------------------

WaveCoefficients WaveCoefficients::stationary(const Field& a, const Field& b, double a_ref, double b_ref) {
  WaveCoefficients w;
  w.a = [a](double) { return a; };
  w.b = [b](double) { return b; };
  w.a_ref = a_ref;
  w.b_ref = b_ref;
  return w;
}

WaveState rhs_wave(double t, const WaveState& u, double eps, const WaveCoefficients& coef) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const GridPtr& g = u.u.grid_ptr();
  const std::size_t n = g->size();
  const Values a = coef.a(t).values();
  const Values b = coef.b(t).values();
  for (std::size_t x = 0; x < n; ++x)
    if (!(a[x] >= coef.floor) || !(b[x] >= coef.floor))
      throw std::domain_error("wave coefficient below its positive floor");
  const Values elastic = conductive_term(u.u, b).values();
  const Values w = u.w.values();
  const Values adot = coef.a_dot ? coef.a_dot(t).values() : Values(n, 0.0);
  const Values src = coef.forcing ? coef.forcing(t).values() : Values(n, 0.0);
  const double e2 = eps * eps;
  Values acc(n);
  for (std::size_t x = 0; x < n; ++x) acc[x] = (elastic[x] + src[x] - e2 * adot[x] * w[x]) / (e2 * a[x]);
  return {u.w, to_field(g, acc)};
}

SymbolFn wave_stiff_symbol(const GridPtr& grid, double eps, const WaveCoefficients& coef) {
  const double speed2 = coef.b_ref / (coef.a_ref * eps * eps);
  return [grid, speed2](std::size_t mode) {
    MatrixXcd L = MatrixXcd::Zero(2, 2);
    L(0, 1) = 1.0;
    L(1, 0) = speed2 * laplacian_symbol(*grid, mode);
    return L;
  };
}

SplitOperator build_wave_split(const GridPtr& grid, double eps, const WaveCoefficients& coef) {
  return SplitOperator(grid, 2, wave_stiff_symbol(grid, eps, coef), [eps, coef](double t, const Bundle& u) {
    return rhs_wave(t, WaveState::unpack(u), eps, coef).pack();
  });
}

double wave_soft_rate(const Grid& grid, double eps, const WaveCoefficients& coef, double t) {
  const Values a = coef.a(t).values();
  const Values b = coef.b(t).values();
  double dev = 0.0;
  double damping = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) dev = std::max(dev, std::abs(b[x] / a[x] - coef.b_ref / coef.a_ref));
  if (coef.a_dot) {
    const Values ad = coef.a_dot(t).values();
    for (std::size_t x = 0; x < a.size(); ++x) damping = std::max(damping, std::abs(ad[x] / a[x]));
  }
  return max_resolved_wavenumber(grid) * std::sqrt(dev) / eps + damping;
}

double wave_energy(const WaveState& u, double eps, const Field& a, const Field& b) {
  const Values av = a.values();
  const Values bv = b.values();
  const Values w = u.w.values();
  const auto du = gradient_values(u.u);
  double e = 0.0;
  for (std::size_t x = 0; x < w.size(); ++x) {
    double g2 = 0.0;
    for (const auto& c : du) g2 += c[x] * c[x];
    e += av[x] * eps * eps * w[x] * w[x] + bv[x] * g2;
  }
  return 0.5 * e / static_cast<double>(w.size());
}

// ---------------------------------------------------------------------------

FrozenCoefficients freeze_coefficients(const Field& theta_bar, const std::vector<Field>& vbar,
                                       const CoefficientSet& c) {
  const double chi1 = c.chi1(0.0);
  const double chi2 = c.chi2(0.0);
  const double chi3 = c.chi3(0.0);
  return {compose(theta_bar, [&](double t) { return c.g1(t, 0.0); }),
          compose(theta_bar, [&](double t) { return c.g2(t, 0.0); }),
          compose(theta_bar, [&](double t) { return c.g3(t, 0.0); }),
          compose(theta_bar, [&](double t) { return chi1 * c.beta(t); }),
          compose(theta_bar, [&](double t) { return chi2 * c.zeta(t); }),
          compose(theta_bar, [&](double t) { return chi2 * (c.zeta(t) + c.eta(t)); }),
          compose(theta_bar, [&](double t) { return chi3 * c.beta(t); }),
          vbar};
}

FlowState rhs_linearized(const FlowState& u, const FrozenCoefficients& f, const ParamTriple& a) {
  const GridPtr& g = u.p.grid_ptr();
  const std::size_t n = g->size();
  const std::size_t d = dim_of(g);
  const double eps = a.eps();
  const double mu = a.mu();
  const double kappa = a.kappa();
  const Values g1 = f.g1.values();
  const Values g2 = f.g2.values();
  const Values g3 = f.g3.values();
  const auto vbar = values_of(f.vbar);
  const auto dp = gradient_values(u.p);
  const auto dth = gradient_values(u.theta);
  const auto dv = velocity_gradient(u.v);
  const Values divv = divergence_values(dv, n);

  Values heat_p(n, 0.0), heat_t(n, 0.0);
  if (kappa > 0.0) {
    heat_p = conductive_term(u.theta, f.beta1.values()).values();
    heat_t = conductive_term(u.theta, f.beta3.values()).values();
  }
  std::vector<Values> visc(d, Values(n, 0.0));
  if (mu > 0.0) {
    const Values b2 = f.beta2.values();
    const Values b2s = f.beta2_sharp.values();
    const auto ddiv = gradient_values(div(u.v));
    for (std::size_t i = 0; i < d; ++i) {
      const Values lap = laplacian(u.v[i]).values();
      for (std::size_t x = 0; x < n; ++x) visc[i][x] = b2[x] * lap[x] + b2s[x] * ddiv[i][x];
    }
  }
  const Values ap = advect(vbar, dp);
  const Values at = advect(vbar, dth);
  Values out_p(n), out_th(n);
  std::vector<Values> out_v(d, Values(n));
  for (std::size_t x = 0; x < n; ++x) {
    out_p[x] = -ap[x] + (-divv[x] + kappa * heat_p[x]) / (eps * g1[x]);
    out_th[x] = -at[x] + (-divv[x] + kappa * heat_t[x]) / g3[x];
  }
  for (std::size_t i = 0; i < d; ++i) {
    const Values av = advect(vbar, dv[i]);
    for (std::size_t x = 0; x < n; ++x) out_v[i][x] = -av[x] + (-dp[i][x] / eps + mu * visc[i][x]) / g2[x];
  }
  FlowState out{to_field(g, out_p), {}, to_field(g, out_th)};
  for (const auto& fv : out_v) out.v.push_back(to_field(g, fv));
  return out;
}

SplitOperator build_linearized_split(const GridPtr& grid, const FrozenCoefficients& f, const ParamTriple& a) {
  const ReferenceCoefficients r{f.g1.mean(),   f.g2.mean(), f.g3.mean(), 1.0, 1.0, 1.0, 0.0, 0.0, 0.0};
  const double b1 = f.beta1.mean();
  const double b2 = f.beta2.mean();
  const double b2s = f.beta2_sharp.mean();
  const double b3 = f.beta3.mean();
  SymbolFn symbol = [grid, a, r, b1, b2, b2s, b3](std::size_t mode) {
    const Grid& g = *grid;
    const Eigen::Index d = g.dim();
    const double eps = a.eps();
    const Eigen::VectorXcd D = derivative_vector(g, mode);
    const double lap = laplacian_symbol(g, mode);
    const Eigen::Index th = d + 1;
    MatrixXcd L = MatrixXcd::Zero(d + 2, d + 2);
    for (Eigen::Index j = 0; j < d; ++j) {
      L(0, 1 + j) = -D(j) / (eps * r.g1);
      L(1 + j, 0) = -D(j) / (eps * r.g2);
      L(th, 1 + j) = -D(j) / r.g3;
    }
    L(0, th) = (a.kappa() / eps) * b1 * lap / r.g1;
    L(th, th) = a.kappa() * b3 * lap / r.g3;
    if (a.mu() > 0.0) add_viscous_block(L, 1, D, lap, a.mu() / r.g2, b2, b2s);
    return L;
  };
  return SplitOperator(grid, grid->dim() + 2, symbol, [f, a](double, const Bundle& u) {
    return rhs_linearized(FlowState::unpack(u), f, a).pack();
  });
}

double linearized_soft_rate(const FrozenCoefficients& f, const ParamTriple& a) {
  auto ratio = [](const Field& num, const Field& den) {
    const Values nv = num.values();
    const Values dv = den.values();
    Values out(nv.size());
    for (std::size_t x = 0; x < nv.size(); ++x) out[x] = nv[x] / dv[x];
    return out;
  };
  auto inverse = [](const Field& den) {
    Values out = den.values();
    for (auto& x : out) x = 1.0 / x;
    return out;
  };
  const double eps = a.eps();
  const double first = std::max(max_deviation(inverse(f.g1), 1.0 / f.g1.mean()),
                                max_deviation(inverse(f.g2), 1.0 / f.g2.mean())) / eps +
                       max_deviation(inverse(f.g3), 1.0 / f.g3.mean());
  const double second =
      (a.kappa() / eps) * max_deviation(ratio(f.beta1, f.g1), f.beta1.mean() / f.g1.mean()) +
      a.kappa() * max_deviation(ratio(f.beta3, f.g3), f.beta3.mean() / f.g3.mean()) +
      a.mu() * (max_deviation(ratio(f.beta2, f.g2), f.beta2.mean() / f.g2.mean()) +
                max_deviation(ratio(f.beta2_sharp, f.g2), f.beta2_sharp.mean() / f.g2.mean()));
  const double k = max_resolved_wavenumber(f.g1.grid());
  return k * first + k * k * second + k * max_speed(f.vbar);
}

// ---------------------------------------------------------------------------

FlowState apply_skew_penalization(const Field& gamma1, const Field& gamma2, const FlowState& u) {
  const Field dv = div(u.v);
  FlowState out{multiply(gamma1, dv), {}, multiply(gamma2, dv)};
  const Field potential = multiply(gamma1, u.p) + multiply(gamma2, u.theta);
  out.v = grad(potential);
  return out;
}

double viscous_form(const Field& zeta, const Field& eta, const std::vector<Field>& u) {
  const auto gd = grad(div(u));
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Field term = multiply(zeta, laplacian(u[i])) + multiply(eta, gd[i]);
    s -= inner(term, u[i]);
  }
  return s;
}

}  // namespace lowmach
