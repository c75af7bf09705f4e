#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace lowmach {

using Complex = std::complex<double>;

class GridMismatch : public std::invalid_argument {
 public:
  GridMismatch() : std::invalid_argument("fields live on different grids") {}
};

/// Periodic tensor grid on the torus [0, L)^d with n points per direction.
///
/// Fourier modes are stored in FFT order: index i along an axis carries the
/// integer frequency i for i < n/2 and i - n otherwise, so the unpaired
/// Nyquist frequency is -n/2. Physical wavenumbers are 2*pi*k/L.
class Grid {
 public:
  static std::shared_ptr<const Grid> make(int dim, int points,
                                          double length = 2.0 * std::numbers::pi);
  ~Grid();
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int dim() const { return dim_; }
  int points() const { return n_; }
  double length() const { return length_; }
  std::size_t size() const { return size_; }
  double spacing() const { return length_ / n_; }
  /// 2*pi/L
  double scale() const { return scale_; }

  int mode_index(std::size_t flat, int axis) const {
    return kint_[static_cast<std::size_t>(axis) * size_ + flat];
  }
  double wavenumber(std::size_t flat, int axis) const {
    return scale_ * mode_index(flat, axis);
  }
  double wavenumber_norm2(std::size_t flat) const { return knorm2_[flat]; }
  bool is_nyquist(std::size_t flat, int axis) const {
    return mode_index(flat, axis) == -n_ / 2;
  }
  /// Largest |k_i| retained by the 2/3 rule.
  int dealias_cutoff() const { return n_ / 3; }
  bool kept_by_dealias(std::size_t flat) const { return dealias_mask_[flat] != 0; }
  double coordinate(std::size_t flat, int axis) const;

  bool same_as(const Grid& other) const {
    return this == &other ||
           (dim_ == other.dim_ && n_ == other.n_ && length_ == other.length_);
  }

  /// values -> coefficients with u(x) = sum_k c_k exp(i k.x).
  void forward(std::span<const double> values, std::span<Complex> coeffs) const;
  /// coefficients -> real samples (imaginary residue is dropped).
  void inverse(std::span<const Complex> coeffs, std::span<double> values) const;

 private:
  Grid(int dim, int points, double length);

  int dim_;
  int n_;
  double length_;
  double scale_;
  std::size_t size_;
  std::vector<int> kint_;
  std::vector<double> knorm2_;
  std::vector<unsigned char> dealias_mask_;
  void* plan_forward_ = nullptr;
  void* plan_backward_ = nullptr;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(int dim, int points, double length = 2.0 * std::numbers::pi);

/// Real scalar field on a Grid, stored by its Fourier coefficients.
class Field {
 public:
  explicit Field(GridPtr grid);
  Field(GridPtr grid, std::vector<Complex> coeffs);

  static Field from_values(GridPtr grid, std::span<const double> values);
  static Field from_function(GridPtr grid,
                             const std::function<double(std::span<const double>)>& fn);
  static Field constant(GridPtr grid, double value);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const Complex> coeffs() const { return coeffs_; }
  std::span<Complex> coeffs() { return coeffs_; }
  std::vector<double> values() const;
  /// Mean over the torus (the k = 0 coefficient).
  double mean() const { return coeffs_[0].real(); }
  double max_abs() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  GridPtr grid_;
  std::vector<Complex> coeffs_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);
Field operator*(Field a, double s);
Field operator-(Field a);

void require_same_grid(const Field& a, const Field& b);

/// Symbol q(xi) of a Fourier multiplier together with its order tag m.
struct MultiplierSymbol {
  std::function<Complex(std::span<const double>)> evaluate;
  double order = 0.0;
};

Field apply_multiplier(const MultiplierSymbol& q, const Field& u);
/// Pointwise product of two symbols; order tags add.
MultiplierSymbol compose(const MultiplierSymbol& a, const MultiplierSymbol& b);

/// Smooth radial cutoff: 1 on r <= 1, 0 on r >= 2, C-infinity in between.
double cutoff_profile(double r);
/// xi -> cutoff(h |xi|), the symbol of the mollifier J_h. Requires h in (0, 1].
MultiplierSymbol mollifier_symbol(double h);
/// xi -> (1 + h^2 |xi|^2)^(m/2), the symbol of (I - h^2 Laplacian)^(m/2).
MultiplierSymbol bessel_symbol(double h, double m);

Field mollify(const Field& u, double h);
Field bessel(const Field& u, double h, double m);

/// Per-mode symbols of d/dx_axis (i k, zero at Nyquist) and of the Laplacian.
Complex derivative_symbol(const Grid& g, std::size_t flat, int axis);
double laplacian_symbol(const Grid& g, std::size_t flat);

Field derivative(const Field& u, int axis);
std::vector<Field> grad(const Field& u);
Field div(std::span<const Field> w);
Field laplacian(const Field& u);
/// (curl w)_{ij} = d_j w_i - d_i w_j
std::vector<std::vector<Field>> curl(std::span<const Field> w);

/// 2/3 rule: zero every coefficient with some |k_i| > n/3.
Field dealias(const Field& u);
void dealias_in_place(std::span<Complex> coeffs, const Grid& grid);

/// Pointwise product evaluated on the grid, then dealiased.
Field multiply(const Field& a, const Field& b);
/// Pointwise map f(u(x)) evaluated on the grid, then dealiased.
Field compose(const Field& u, const std::function<double(double)>& f);

/// Real random field with modes |k_i| <= band, rescaled so that its H^sigma
/// norm equals `norm_value`. Deterministic in `seed`. The mean mode is zero.
Field random_band_limited_field(std::uint64_t seed, GridPtr grid, int band,
                                double sigma, double norm_value);

/// Random field whose coefficient magnitudes follow `amplitude(|k|)` (random
/// phases and Gaussian factors), band limited to |k_i| <= band, normalised to
/// unit L2 norm.
Field random_field_with_spectrum(std::uint64_t seed, GridPtr grid, int band,
                                 const std::function<double(double)>& amplitude);

/// L2 norm from physical samples: sqrt(mean of u^2) over the torus.
double l2_norm_physical(const Field& u);
/// Inner product <a, b> = mean of a*b over the torus, from coefficients.
double inner(const Field& a, const Field& b);
double inner(std::span<const Field> a, std::span<const Field> b);

}  // namespace lowmach
