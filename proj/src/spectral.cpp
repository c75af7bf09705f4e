#include "lowmach/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <string>

namespace lowmach {

namespace {

// The FFTW planner is not re-entrant; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int fft_index_to_mode(int i, int n) { return i < n / 2 ? i : i - n; }

std::size_t mirror_index(const Grid& g, std::size_t flat) {
  // flat = sum_a i_a * n^(d-1-a), row-major with axis 0 slowest
  const int n = g.points();
  std::size_t out = 0;
  std::size_t stride = 1;
  std::size_t rest = flat;
  std::vector<int> idx(static_cast<std::size_t>(g.dim()));
  for (int a = g.dim() - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(rest % static_cast<std::size_t>(n));
    rest /= static_cast<std::size_t>(n);
  }
  for (int a = g.dim() - 1; a >= 0; --a) {
    const int i = idx[static_cast<std::size_t>(a)];
    out += static_cast<std::size_t>((n - i) % n) * stride;
    stride *= static_cast<std::size_t>(n);
  }
  return out;
}

}  // namespace

Grid::Grid(int dim, int points, double length)
    : dim_(dim), n_(points), length_(length), scale_(2.0 * std::numbers::pi / length) {
  size_ = 1;
  for (int a = 0; a < dim_; ++a) size_ *= static_cast<std::size_t>(n_);

  kint_.resize(static_cast<std::size_t>(dim_) * size_);
  knorm2_.resize(size_);
  dealias_mask_.resize(size_);
  const int cutoff = n_ / 3;
  for (std::size_t flat = 0; flat < size_; ++flat) {
    std::size_t rest = flat;
    double k2 = 0.0;
    bool kept = true;
    for (int a = dim_ - 1; a >= 0; --a) {
      const int i = static_cast<int>(rest % static_cast<std::size_t>(n_));
      rest /= static_cast<std::size_t>(n_);
      const int k = fft_index_to_mode(i, n_);
      kint_[static_cast<std::size_t>(a) * size_ + flat] = k;
      k2 += (scale_ * k) * (scale_ * k);
      if (std::abs(k) > cutoff) kept = false;
    }
    knorm2_[flat] = k2;
    dealias_mask_[flat] = kept ? 1 : 0;
  }

  std::vector<int> dims(static_cast<std::size_t>(dim_), n_);
  std::vector<Complex> a(size_), b(size_);
  std::lock_guard lock(planner_mutex());
  auto* in = reinterpret_cast<fftw_complex*>(a.data());
  auto* out = reinterpret_cast<fftw_complex*>(b.data());
  plan_forward_ = fftw_plan_dft(dim_, dims.data(), in, out, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_backward_ = fftw_plan_dft(dim_, dims.data(), in, out, FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
}

Grid::~Grid() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
}

std::shared_ptr<const Grid> Grid::make(int dim, int points, double length) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
  if (points % 2 != 0) throw std::invalid_argument("grid point count must be even");
  if (points < 8) throw std::invalid_argument("grid point count must be at least 8");
  if (!(length > 0.0)) throw std::invalid_argument("box length must be positive");
  return std::shared_ptr<const Grid>(new Grid(dim, points, length));
}

GridPtr make_grid(int dim, int points, double length) { return Grid::make(dim, points, length); }

double Grid::coordinate(std::size_t flat, int axis) const {
  std::size_t rest = flat;
  for (int a = dim_ - 1; a > axis; --a) rest /= static_cast<std::size_t>(n_);
  return spacing() * static_cast<double>(rest % static_cast<std::size_t>(n_));
}

void Grid::forward(std::span<const double> values, std::span<Complex> coeffs) const {
  std::vector<Complex> in(values.begin(), values.end());
  fftw_execute_dft(static_cast<fftw_plan>(plan_forward_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(coeffs.data()));
  const double inv = 1.0 / static_cast<double>(size_);
  for (auto& c : coeffs) c *= inv;
}

void Grid::inverse(std::span<const Complex> coeffs, std::span<double> values) const {
  std::vector<Complex> in(coeffs.begin(), coeffs.end());
  std::vector<Complex> out(size_);
  fftw_execute_dft(static_cast<fftw_plan>(plan_backward_),
                   reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  for (std::size_t i = 0; i < size_; ++i) values[i] = out[i].real();
}

// ---------------------------------------------------------------------------

Field::Field(GridPtr grid) : grid_(std::move(grid)), coeffs_(grid_->size()) {}

Field::Field(GridPtr grid, std::vector<Complex> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_->size())
    throw std::invalid_argument("coefficient count does not match grid");
}

Field Field::from_values(GridPtr grid, std::span<const double> values) {
  if (values.size() != grid->size()) throw std::invalid_argument("sample count does not match grid");
  Field f(grid);
  grid->forward(values, f.coeffs_);
  return f;
}

Field Field::from_function(GridPtr grid,
                           const std::function<double(std::span<const double>)>& fn) {
  std::vector<double> vals(grid->size());
  std::vector<double> x(static_cast<std::size_t>(grid->dim()));
  for (std::size_t i = 0; i < grid->size(); ++i) {
    for (int a = 0; a < grid->dim(); ++a) x[static_cast<std::size_t>(a)] = grid->coordinate(i, a);
    vals[i] = fn(x);
  }
  return from_values(std::move(grid), vals);
}

Field Field::constant(GridPtr grid, double value) {
  Field f(std::move(grid));
  f.coeffs_[0] = value;
  return f;
}

std::vector<double> Field::values() const {
  std::vector<double> v(grid_->size());
  grid_->inverse(coeffs_, v);
  return v;
}

double Field::max_abs() const {
  double m = 0.0;
  for (double x : values()) m = std::max(m, std::abs(x));
  return m;
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }
Field operator*(Field a, double s) { return a *= s; }
Field operator-(Field a) { return a *= -1.0; }

void require_same_grid(const Field& a, const Field& b) {
  if (!a.grid().same_as(b.grid())) throw GridMismatch();
}

// ---------------------------------------------------------------------------

Field apply_multiplier(const MultiplierSymbol& q, const Field& u) {
  const Grid& g = u.grid();
  Field out(u.grid_ptr());
  std::vector<double> xi(static_cast<std::size_t>(g.dim()));
  auto in = u.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int a = 0; a < g.dim(); ++a) xi[static_cast<std::size_t>(a)] = g.wavenumber(i, a);
    dst[i] = q.evaluate(xi) * in[i];
  }
  return out;
}

MultiplierSymbol compose(const MultiplierSymbol& a, const MultiplierSymbol& b) {
  return {[ea = a.evaluate, eb = b.evaluate](std::span<const double> xi) { return ea(xi) * eb(xi); },
          a.order + b.order};
}

double cutoff_profile(double r) {
  auto psi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  r = std::abs(r);
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double a = psi(2.0 - r);
  const double b = psi(r - 1.0);
  return a / (a + b);
}

namespace {
double norm_of(std::span<const double> xi) {
  double s = 0.0;
  for (double x : xi) s += x * x;
  return std::sqrt(s);
}
}  // namespace

MultiplierSymbol mollifier_symbol(double h) {
  if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("mollifier scale must lie in (0, 1]");
  return {[h](std::span<const double> xi) { return Complex(cutoff_profile(h * norm_of(xi))); },
          -std::numeric_limits<double>::infinity()};
}

MultiplierSymbol bessel_symbol(double h, double m) {
  if (!(h >= 0.0 && h <= 1.0)) throw std::invalid_argument("Bessel scale must lie in [0, 1]");
  return {[h, m](std::span<const double> xi) {
            double s = 0.0;
            for (double x : xi) s += x * x;
            return Complex(std::pow(1.0 + h * h * s, 0.5 * m));
          },
          m};
}

Field mollify(const Field& u, double h) {
  if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("mollifier scale must lie in (0, 1]");
  const Grid& g = u.grid();
  Field out(u.grid_ptr());
  auto in = u.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < g.size(); ++i)
    dst[i] = cutoff_profile(h * std::sqrt(g.wavenumber_norm2(i))) * in[i];
  return out;
}

Field bessel(const Field& u, double h, double m) {
  const Grid& g = u.grid();
  Field out(u.grid_ptr());
  auto in = u.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < g.size(); ++i)
    dst[i] = std::pow(1.0 + h * h * g.wavenumber_norm2(i), 0.5 * m) * in[i];
  return out;
}

// ---------------------------------------------------------------------------

Complex derivative_symbol(const Grid& g, std::size_t flat, int axis) {
  return g.is_nyquist(flat, axis) ? Complex(0.0) : Complex(0.0, g.wavenumber(flat, axis));
}

double laplacian_symbol(const Grid& g, std::size_t flat) {
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a)
    if (!g.is_nyquist(flat, a)) s += g.wavenumber(flat, a) * g.wavenumber(flat, a);
  return -s;
}

Field derivative(const Field& u, int axis) {
  const Grid& g = u.grid();
  if (axis < 0 || axis >= g.dim()) throw std::out_of_range("derivative axis");
  Field out(u.grid_ptr());
  auto in = u.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < g.size(); ++i)
    dst[i] = g.is_nyquist(i, axis) ? Complex(0.0) : Complex(0.0, g.wavenumber(i, axis)) * in[i];
  return out;
}

std::vector<Field> grad(const Field& u) {
  std::vector<Field> out;
  for (int a = 0; a < u.grid().dim(); ++a) out.push_back(derivative(u, a));
  return out;
}

Field div(std::span<const Field> w) {
  if (w.empty()) throw std::invalid_argument("div of an empty vector field");
  const Grid& g = w[0].grid();
  if (static_cast<int>(w.size()) != g.dim())
    throw std::invalid_argument("vector field has wrong number of components");
  Field out = derivative(w[0], 0);
  for (int a = 1; a < g.dim(); ++a) {
    require_same_grid(w[0], w[static_cast<std::size_t>(a)]);
    out += derivative(w[static_cast<std::size_t>(a)], a);
  }
  return out;
}

Field laplacian(const Field& u) {
  const Grid& g = u.grid();
  Field out(u.grid_ptr());
  auto in = u.coeffs();
  auto dst = out.coeffs();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a)
      if (!g.is_nyquist(i, a)) s += g.wavenumber(i, a) * g.wavenumber(i, a);
    dst[i] = -s * in[i];
  }
  return out;
}

std::vector<std::vector<Field>> curl(std::span<const Field> w) {
  if (w.empty()) throw std::invalid_argument("curl of an empty vector field");
  const int d = w[0].grid().dim();
  if (static_cast<int>(w.size()) != d) throw std::invalid_argument("vector field has wrong number of components");
  std::vector<std::vector<Field>> out(static_cast<std::size_t>(d),
                                      std::vector<Field>(static_cast<std::size_t>(d), Field(w[0].grid_ptr())));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      require_same_grid(w[0], w[static_cast<std::size_t>(i)]);
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          derivative(w[static_cast<std::size_t>(i)], j) - derivative(w[static_cast<std::size_t>(j)], i);
    }
  return out;
}

void dealias_in_place(std::span<Complex> coeffs, const Grid& grid) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!grid.kept_by_dealias(i)) coeffs[i] = 0.0;
}

Field dealias(const Field& u) {
  Field out = u;
  dealias_in_place(out.coeffs(), out.grid());
  return out;
}

Field multiply(const Field& a, const Field& b) {
  require_same_grid(a, b);
  auto va = a.values();
  auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) va[i] *= vb[i];
  Field out = Field::from_values(a.grid_ptr(), va);
  dealias_in_place(out.coeffs(), out.grid());
  return out;
}

Field compose(const Field& u, const std::function<double(double)>& f) {
  auto v = u.values();
  for (auto& x : v) x = f(x);
  Field out = Field::from_values(u.grid_ptr(), v);
  dealias_in_place(out.coeffs(), out.grid());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Field hermitian_random(std::uint64_t seed, const GridPtr& grid, int band,
                       const std::function<double(double)>& amplitude) {
  const Grid& g = *grid;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Complex> c(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    bool inside = true;
    for (int a = 0; a < g.dim(); ++a)
      if (std::abs(g.mode_index(i, a)) > band) inside = false;
    if (inside) c[i] = Complex(re, im) * amplitude(std::sqrt(g.wavenumber_norm2(i)));
  }
  std::vector<Complex> sym(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    sym[i] = 0.5 * (c[i] + std::conj(c[mirror_index(g, i)]));
  sym[0] = 0.0;
  return Field(grid, std::move(sym));
}

double hs_norm(const Field& u, double sigma) {
  const Grid& g = u.grid();
  double s = 0.0;
  auto c = u.coeffs();
  for (std::size_t i = 0; i < g.size(); ++i)
    s += std::pow(1.0 + g.wavenumber_norm2(i), sigma) * std::norm(c[i]);
  return std::sqrt(s);
}

}  // namespace

Field random_band_limited_field(std::uint64_t seed, GridPtr grid, int band, double sigma,
                                double norm_value) {
  if (band > grid->dealias_cutoff())
    throw std::invalid_argument("band " + std::to_string(band) + " exceeds the dealiasing cutoff " +
                                std::to_string(grid->dealias_cutoff()));
  if (band < 1) throw std::invalid_argument("band must be at least 1");
  if (norm_value < 0.0) throw std::invalid_argument("target norm must be nonnegative");
  Field f = hermitian_random(seed, grid, band, [](double) { return 1.0; });
  if (norm_value == 0.0) return Field(grid);
  const double n = hs_norm(f, sigma);
  return f * (norm_value / n);
}

Field random_field_with_spectrum(std::uint64_t seed, GridPtr grid, int band,
                                 const std::function<double(double)>& amplitude) {
  if (band >= grid->points() / 2) throw std::invalid_argument("band must stay below the Nyquist mode");
  Field f = hermitian_random(seed, grid, band, amplitude);
  const double n = hs_norm(f, 0.0);
  return n > 0.0 ? f * (1.0 / n) : f;
}

double l2_norm_physical(const Field& u) {
  const auto v = u.values();
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

double inner(const Field& a, const Field& b) {
  require_same_grid(a, b);
  double s = 0.0;
  auto ca = a.coeffs();
  auto cb = b.coeffs();
  for (std::size_t i = 0; i < ca.size(); ++i) s += (ca[i] * std::conj(cb[i])).real();
  return s;
}

double inner(std::span<const Field> a, std::span<const Field> b) {
  if (a.size() != b.size()) throw std::invalid_argument("component count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += inner(a[i], b[i]);
  return s;
}

}  // namespace lowmach
