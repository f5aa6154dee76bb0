#pragma once

// Low-level numerical primitives shared by every solver: uniform grids and
// nodal fields, composite quadrature, banded direct solves and
// finite-difference Laplacians (Cartesian and radial).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "crystal/error.hpp"

namespace crystal::numerics {

/// Uniform node-centred grid on an interval (dim 1) or a rectangle (dim 2).
///
/// Nodes are numbered lexicographically, x fastest. Boundary nodes are the
/// interval endpoints or the rectangle perimeter; every interior node has all
/// of its 3-point / 5-point stencil neighbours.
class Grid {
 public:
  static Grid interval(double lower, double upper, int cells) {
    if (!(upper > lower)) throw InvalidInput("interval: upper must exceed lower");
    if (cells < 2) throw InvalidInput("interval: need at least 2 cells");
    Grid g;
    g.dim_ = 1;
    g.nx_ = cells;
    g.ny_ = 0;
    g.x0_ = lower;
    g.y0_ = 0.0;
    g.h_ = (upper - lower) / cells;
    g.build_index_sets();
    return g;
  }

  /// Rectangle [x0, x0 + nx*h] x [y0, y0 + ny*h] with square cells.
  static Grid rectangle(double x0, double y0, int nx, int ny, double spacing) {
    if (!(spacing > 0.0)) throw InvalidInput("rectangle: spacing must be positive");
    if (nx < 2 || ny < 2) throw InvalidInput("rectangle: need at least 2 cells per side");
    Grid g;
    g.dim_ = 2;
    g.nx_ = nx;
    g.ny_ = ny;
    g.x0_ = x0;
    g.y0_ = y0;
    g.h_ = spacing;
    g.build_index_sets();
    return g;
  }

  static Grid unit_square(int cells) { return rectangle(0.0, 0.0, cells, cells, 1.0 / cells); }

  int dim() const noexcept { return dim_; }
  double spacing() const noexcept { return h_; }
  int cells_x() const noexcept { return nx_; }
  int cells_y() const noexcept { return ny_; }
  int nodes_x() const noexcept { return nx_ + 1; }
  int nodes_y() const noexcept { return dim_ == 1 ? 1 : ny_ + 1; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(nodes_x()) * static_cast<std::size_t>(nodes_y());
  }

  double lower_x() const noexcept { return x0_; }
  double upper_x() const noexcept { return x0_ + nx_ * h_; }
  double lower_y() const noexcept { return y0_; }
  double upper_y() const noexcept { return dim_ == 1 ? y0_ : y0_ + ny_ * h_; }

  std::size_t index(int i, int j = 0) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nodes_x()) +
           static_cast<std::size_t>(i);
  }
  int ix(std::size_t node) const noexcept { return static_cast<int>(node % nodes_x()); }
  int iy(std::size_t node) const noexcept { return static_cast<int>(node / nodes_x()); }
  double x(std::size_t node) const noexcept { return x0_ + ix(node) * h_; }
  double y(std::size_t node) const noexcept { return y0_ + iy(node) * h_; }

  const std::vector<std::size_t>& interior() const noexcept { return interior_; }
  const std::vector<std::size_t>& boundary() const noexcept { return boundary_; }

  /// Number of grid steps between the node and the nearest boundary node.
  int boundary_distance(std::size_t node) const noexcept {
    const int i = ix(node);
    int d = std::min(i, nx_ - i);
    if (dim_ == 2) {
      const int j = iy(node);
      d = std::min(d, std::min(j, ny_ - j));
    }
    return d;
  }
  bool is_boundary(std::size_t node) const noexcept { return boundary_distance(node) == 0; }

 private:
  Grid() = default;

  void build_index_sets() {
    interior_.clear();
    boundary_.clear();
    for (std::size_t n = 0; n < size(); ++n) {
      (is_boundary(n) ? boundary_ : interior_).push_back(n);
    }
  }

  int dim_ = 1;
  int nx_ = 0;
  int ny_ = 0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  double h_ = 0.0;
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> boundary_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(Grid g) { return std::make_shared<const Grid>(std::move(g)); }

/// Real nodal values on a shared grid.
struct Field {
  GridPtr grid;
  std::vector<double> values;

  Field() = default;
  Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (!grid) throw InvalidInput("Field: null grid");
    if (values.size() != grid->size()) throw InvalidInput("Field: one value per node required");
  }

  static Field zeros(GridPtr g) {
    const std::size_t n = g->size();
    return Field(std::move(g), std::vector<double>(n, 0.0));
  }

  template <typename Fn>
  static Field sample(GridPtr g, Fn&& fn) {
    std::vector<double> v(g->size());
    for (std::size_t n = 0; n < v.size(); ++n) {
      if constexpr (std::is_invocable_v<Fn&, double>) {
        if (g->dim() != 1) throw InvalidInput("Field::sample: 2-D grid needs fn(x, y)");
        v[n] = fn(g->x(n));
      } else {
        if (g->dim() != 2) throw InvalidInput("Field::sample: 1-D grid needs fn(x)");
        v[n] = fn(g->x(n), g->y(n));
      }
    }
    return Field(std::move(g), std::move(v));
  }

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t n) const noexcept { return values[n]; }
  double& operator[](std::size_t n) noexcept { return values[n]; }

  bool finite() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
};

inline double max_abs(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Quadrature

/// Treatment of an odd number of panels (even sample count).
enum class EndRule {
  trapezoid,  ///< trapezoid on the final panel
  simpson38,  ///< Simpson 3/8 on the final three panels (trapezoid if only one panel)
};

/// Weights (for unit spacing) of composite Simpson on `count` equispaced samples.
inline std::vector<double> simpson_weights(std::size_t count, EndRule rule = EndRule::trapezoid) {
  std::vector<double> w(count, 0.0);
  if (count < 2) return w;
  const std::size_t panels = count - 1;
  auto simpson_over = [&](std::size_t first, std::size_t last) {
    for (std::size_t i = first; i + 2 <= last; i += 2) {
      w[i] += 1.0 / 3.0;
      w[i + 1] += 4.0 / 3.0;
      w[i + 2] += 1.0 / 3.0;
    }
  };
  if (panels % 2 == 0) {
    simpson_over(0, panels);
  } else if (rule == EndRule::simpson38 && panels >= 3) {
    const std::size_t s = panels - 3;
    simpson_over(0, s);
    w[s] += 3.0 / 8.0;
    w[s + 1] += 9.0 / 8.0;
    w[s + 2] += 9.0 / 8.0;
    w[s + 3] += 3.0 / 8.0;
  } else {
    simpson_over(0, panels - 1);
    w[panels - 1] += 0.5;
    w[panels] += 0.5;
  }
  return w;
}

/// Composite Simpson integral of equispaced samples. Exact for cubics when the
/// sample count is odd; an even count falls back to `rule` on the tail.
inline double quad_simpson(std::span<const double> samples, double spacing,
                           EndRule rule = EndRule::trapezoid) {
  if (samples.size() < 2) throw InvalidInput("quad_simpson: need at least 2 samples");
  if (!(spacing > 0.0)) throw InvalidInput("quad_simpson: spacing must be positive");
  const auto w = simpson_weights(samples.size(), rule);
  double s = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) s += w[i] * samples[i];
  return s * spacing;
}

inline double trapezoid(std::span<const double> samples, double spacing) {
  if (samples.size() < 2) throw InvalidInput("trapezoid: need at least 2 samples");
  double s = 0.5 * (samples.front() + samples.back());
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) s += samples[i];
  return s * spacing;
}

/// Tensor-product trapezoid weight of a node (includes the cell measure).
inline double trapezoid_weight(const Grid& g, std::size_t node) noexcept {
  const double h = g.spacing();
  double w = (g.ix(node) == 0 || g.ix(node) == g.cells_x()) ? 0.5 * h : h;
  if (g.dim() == 2) {
    const int j = g.iy(node);
    w *= (j == 0 || j == g.cells_y()) ? 0.5 * h : h;
  }
  return w;
}

/// Trapezoid integral over the grid domain of nodal values.
inline double integrate(const Grid& g, std::span<const double> values) {
  if (values.size() != g.size()) throw InvalidInput("integrate: size mismatch");
  double s = 0.0;
  for (std::size_t n = 0; n < values.size(); ++n) s += trapezoid_weight(g, n) * values[n];
  return s;
}

inline double integrate(const Field& f) { return integrate(*f.grid, f.values); }

// ---------------------------------------------------------------------------
// Banded direct solver

/// Square (or rectangular, for error reporting) matrix with `lower` sub- and
/// `upper` super-diagonals, stored row-wise with room for pivoting fill-in.
class BandedMatrix {
 public:
  BandedMatrix(std::size_t rows, std::size_t cols, std::size_t lower, std::size_t upper)
      : rows_(rows),
        cols_(cols),
        kl_(lower),
        ku_(upper),
        width_(2 * lower + upper + 1),
        data_(rows * (2 * lower + upper + 1), 0.0) {}

  BandedMatrix(std::size_t n, std::size_t lower, std::size_t upper)
      : BandedMatrix(n, n, lower, upper) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t lower() const noexcept { return kl_; }
  std::size_t upper() const noexcept { return ku_; }

  bool in_band(std::size_t i, std::size_t j) const noexcept {
    return i < rows_ && j < cols_ && j + kl_ >= i && j <= i + ku_;
  }

  double operator()(std::size_t i, std::size_t j) const noexcept {
    return in_band(i, j) ? data_[slot(i, j)] : 0.0;
  }

  void set(std::size_t i, std::size_t j, double value) {
    if (!in_band(i, j)) throw InvalidInput("BandedMatrix: entry outside band");
    data_[slot(i, j)] = value;
  }
  void add(std::size_t i, std::size_t j, double value) {
    if (!in_band(i, j)) throw InvalidInput("BandedMatrix: entry outside band");
    data_[slot(i, j)] += value;
  }

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != cols_) throw InvalidInput("BandedMatrix::apply: size mismatch");
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const std::size_t j0 = i > kl_ ? i - kl_ : 0;
      const std::size_t j1 = std::min(cols_ - 1, i + ku_);
      double s = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) s += data_[slot(i, j)] * x[j];
      y[i] = s;
    }
    return y;
  }

  double norm_inf() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const std::size_t j0 = i > kl_ ? i - kl_ : 0;
      const std::size_t j1 = std::min(cols_ - 1, i + ku_);
      double s = 0.0;
      for (std::size_t j = j0; j <= j1; ++j) s += std::abs(data_[slot(i, j)]);
      m = std::max(m, s);
    }
    return m;
  }

 private:
  friend std::vector<double> solve_banded(BandedMatrix a, std::span<const double> rhs);

  // Column j of row i lives at offset j - i + kl; the extra kl columns on the
  // right absorb fill-in from row interchanges.
  std::size_t slot(std::size_t i, std::size_t j) const noexcept {
    return i * width_ + (j + kl_ - i);
  }

  std::size_t rows_, cols_, kl_, ku_, width_;
  std::vector<double> data_;
};

/// Solves A x = rhs by banded LU with partial pivoting.
inline std::vector<double> solve_banded(BandedMatrix a, std::span<const double> rhs) {
  if (a.rows_ != a.cols_) throw FactorizationError("solve_banded: matrix is not square");
  const std::size_t n = a.rows_;
  if (rhs.size() != n) throw InvalidInput("solve_banded: rhs size mismatch");
  if (n == 0) return {};

  const std::size_t kl = a.kl_;
  const std::size_t reach = a.kl_ + a.ku_;
  const double tiny = 1e-14 * std::max(a.norm_inf(), std::numeric_limits<double>::min());
  std::vector<std::size_t> pivot(n);
  std::vector<double> mult(n * std::max<std::size_t>(kl, 1), 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t last_row = std::min(n - 1, i + kl);
    const std::size_t last_col = std::min(n - 1, i + reach);
    std::size_t p = i;
    double best = std::abs(a.data_[a.slot(i, i)]);
    for (std::size_t r = i + 1; r <= last_row; ++r) {
      const double v = std::abs(a.data_[a.slot(r, i)]);
      if (v > best) {
        best = v;
        p = r;
      }
    }
    if (!(best > tiny)) {
      throw FactorizationError("solve_banded: matrix is singular to working precision (pivot " +
                               std::to_string(i) + ")");
    }
    pivot[i] = p;
    if (p != i) {
      for (std::size_t c = i; c <= last_col; ++c) {
        std::swap(a.data_[a.slot(i, c)], a.data_[a.slot(p, c)]);
      }
    }
    const double d = a.data_[a.slot(i, i)];
    for (std::size_t r = i + 1; r <= last_row; ++r) {
      const double m = a.data_[a.slot(r, i)] / d;
      mult[i * kl + (r - i - 1)] = m;
      a.data_[a.slot(r, i)] = 0.0;
      if (m == 0.0) continue;
      for (std::size_t c = i + 1; c <= last_col; ++c) {
        a.data_[a.slot(r, c)] -= m * a.data_[a.slot(i, c)];
      }
    }
  }

  std::vector<double> x(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (pivot[i] != i) std::swap(x[i], x[pivot[i]]);
    const std::size_t last_row = std::min(n - 1, i + kl);
    for (std::size_t r = i + 1; r <= last_row; ++r) x[r] -= mult[i * kl + (r - i - 1)] * x[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    const std::size_t last_col = std::min(n - 1, ii + reach);
    double s = x[ii];
    for (std::size_t c = ii + 1; c <= last_col; ++c) s -= a.data_[a.slot(ii, c)] * x[c];
    x[ii] = s / a.data_[a.slot(ii, ii)];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Finite-difference operators

enum class LaplacianMode { cartesian, radial };

/// 3-point (1-D) or 5-point (2-D) Laplacian at interior nodes of raw nodal values.
/// Boundary entries of the result are zero.
inline std::vector<double> laplacian_values(const Grid& g, std::span<const double> f) {
  if (f.size() != g.size()) throw InvalidInput("laplacian: size mismatch");
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<double> out(f.size(), 0.0);
  const std::size_t stride = static_cast<std::size_t>(g.nodes_x());
  for (std::size_t n : g.interior()) {
    double s = f[n - 1] + f[n + 1] - 2.0 * f[n];
    if (g.dim() == 2) s += f[n - stride] + f[n + stride] - 2.0 * f[n];
    out[n] = s * inv_h2;
  }
  return out;
}

/// Radial Laplacian f'' + (N-1)/r f' on a uniform grid r_i = i*h starting at r = 0.
/// Node 0 uses the symmetric limit 2N (f_1 - f_0)/h^2; the last node is left at zero.
inline std::vector<double> radial_laplacian(std::span<const double> f, double h, int dim) {
  if (f.size() < 3) throw InvalidInput("radial_laplacian: need at least 3 nodes");
  if (!(h > 0.0)) throw InvalidInput("radial_laplacian: spacing must be positive");
  const double inv_h2 = 1.0 / (h * h);
  std::vector<double> out(f.size(), 0.0);
  out[0] = 2.0 * dim * (f[1] - f[0]) * inv_h2;
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    const double r = static_cast<double>(i) * h;
    out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv_h2 +
             (dim - 1) / r * (f[i + 1] - f[i - 1]) / (2.0 * h);
  }
  return out;
}

/// Discrete Laplacian of a field. Radial mode treats a 1-D grid starting at
/// r = 0 as the radial coordinate in `radial_dim` space dimensions.
inline Field laplacian_apply(const Field& field, LaplacianMode mode = LaplacianMode::cartesian,
                             int radial_dim = 0) {
  const Grid& g = *field.grid;
  if (mode == LaplacianMode::cartesian) return Field(field.grid, laplacian_values(g, field.values));
  if (g.dim() != 1) throw ModeError("laplacian_apply: radial mode requires a 1-D grid");
  if (g.lower_x() != 0.0) throw ModeError("laplacian_apply: radial grid must start at r = 0");
  if (radial_dim < 1) throw InvalidInput("laplacian_apply: radial mode needs a space dimension");
  return Field(field.grid, radial_laplacian(field.values, g.spacing(), radial_dim));
}

/// Nodal gradient: central differences inside, second-order one-sided at the boundary.
/// Returns one component vector per space dimension.
inline std::vector<std::vector<double>> gradient(const Grid& g, std::span<const double> f) {
  if (f.size() != g.size()) throw InvalidInput("gradient: size mismatch");
  const double h = g.spacing();
  std::vector<std::vector<double>> grad(g.dim(), std::vector<double>(f.size(), 0.0));
  auto diff = [&](int i, int last, std::size_t n, std::size_t stride) {
    if (i == 0) return (-3.0 * f[n] + 4.0 * f[n + stride] - f[n + 2 * stride]) / (2.0 * h);
    if (i == last) return (3.0 * f[n] - 4.0 * f[n - stride] + f[n - 2 * stride]) / (2.0 * h);
    return (f[n + stride] - f[n - stride]) / (2.0 * h);
  };
  const std::size_t stride_y = static_cast<std::size_t>(g.nodes_x());
  for (std::size_t n = 0; n < f.size(); ++n) {
    grad[0][n] = diff(g.ix(n), g.cells_x(), n, 1);
    if (g.dim() == 2) grad[1][n] = diff(g.iy(n), g.cells_y(), n, stride_y);
  }
  return grad;
}

inline std::vector<double> gradient_squared(const Grid& g, std::span<const double> f) {
  const auto grad = gradient(g, f);
  std::vector<double> out(f.size(), 0.0);
  for (const auto& c : grad) {
    for (std::size_t n = 0; n < f.size(); ++n) out[n] += c[n] * c[n];
  }
  return out;
}

/// Cubic Lagrange interpolation of samples on x_i = origin + i*h.
inline double cubic_interpolate(std::span<const double> f, double h, double x,
                                double origin = 0.0) {
  if (f.size() < 4) throw InvalidInput("cubic_interpolate: need at least 4 samples");
  const double s = (x - origin) / h;
  const double last = static_cast<double>(f.size() - 1);
  if (s < -1e-12 || s > last + 1e-12) throw DomainError("cubic_interpolate: point outside grid");
  const auto cell = static_cast<std::ptrdiff_t>(std::floor(s));
  const std::ptrdiff_t i0 =
      std::clamp<std::ptrdiff_t>(cell - 1, 0, static_cast<std::ptrdiff_t>(f.size()) - 4);
  const double t = s - static_cast<double>(i0);
  const double l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
  const double l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
  const double l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
  const double l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
  return l0 * f[i0] + l1 * f[i0 + 1] + l2 * f[i0 + 2] + l3 * f[i0 + 3];
}

}  // namespace crystal::numerics
