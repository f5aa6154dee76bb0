#pragma once

// Radial self-similar profiles rho(x, t) = t^alpha f(|x| / t^beta).
//
// h = f^3 is computed as a fixed point of the Volterra-type map
//   T(g)(r) = c4 + c2 r^2 + int_0^r G(tau, r) g(tau)^{-1/3} dtau
// on a uniform radial grid, together with the diagnostics used to validate a
// profile: ODE-system residuals, the space-time residual of the evolution
// equation, the growth bounds of h and a weak-form consistency check.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "crystal/error.hpp"
#include "crystal/kernels.hpp"
#include "crystal/numerics.hpp"

namespace crystal::selfsimilar {

using kernels::KernelParams;

struct PicardConfig {
  double R = 1.0;        ///< right end of the radial interval [0, R]
  int nodes = 129;       ///< grid nodes including r = 0 (odd, >= 33)
  double tol = 1e-12;    ///< sup-norm fixed-point tolerance
  int max_iter = 500;
  double damping = 1.0;  ///< h <- (1-d) h + d T(h)

  static double default_damping(double radius) noexcept { return radius <= 1.0 ? 1.0 : 0.5; }

  static PicardConfig for_radius(double radius, int node_count, double tolerance = 1e-12) {
    PicardConfig c;
    c.R = radius;
    c.nodes = node_count;
    c.tol = tolerance;
    c.damping = default_damping(radius);
    return c;
  }

  double spacing() const noexcept { return R / (nodes - 1); }

  void validate() const {
    if (!(R > 0.0) || !std::isfinite(R)) throw InvalidInput("PicardConfig: R must be positive");
    if (nodes < 33) throw InvalidInput("PicardConfig: nodes must be >= 33");
    if (nodes % 2 == 0) throw InvalidInput("PicardConfig: nodes must be odd");
    if (!(tol > 0.0)) throw InvalidInput("PicardConfig: tol must be positive");
    if (max_iter < 1) throw InvalidInput("PicardConfig: max_iter must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) {
      throw InvalidInput("PicardConfig: damping must lie in (0, 1]");
    }
  }
};

/// Radial profile h = f^3 on r_i = i * spacing, with v = Laplacian of h.
///
/// Profiles returned by the solver carry v reconstructed from the integral
/// representation; profiles built with from_samples carry v = discrete
/// radial Laplacian of h.
struct RadialProfile {
  std::vector<double> r{};
  std::vector<double> h{};
  std::vector<double> v{};
  KernelParams params;
  double c2 = 0.0;
  double c4 = 0.0;
  PicardConfig config{};
  int iterations = 0;
  double defect = 0.0;
  std::vector<double> defect_history{};

  std::size_t size() const noexcept { return r.size(); }
  double spacing() const noexcept { return r.size() > 1 ? r[1] - r[0] : 0.0; }
  double R() const noexcept { return r.empty() ? 0.0 : r.back(); }
  double f(std::size_t i) const noexcept { return std::cbrt(h[i]); }
  double lower_envelope(std::size_t i) const noexcept { return c4 + c2 * r[i] * r[i]; }

  /// Profile from given samples of h (not a fixed point); v is the discrete
  /// radial Laplacian of h, quadratically extrapolated at the last node.
  static RadialProfile from_samples(const KernelParams& params, double spacing,
                                    std::vector<double> h_values) {
    if (h_values.size() < 5) throw InvalidInput("from_samples: need at least 5 nodes");
    if (!(spacing > 0.0)) throw InvalidInput("from_samples: spacing must be positive");
    RadialProfile p{.r = {}, .h = std::move(h_values), .v = {}, .params = params};
    const std::size_t n = p.h.size();
    p.r.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.r[i] = static_cast<double>(i) * spacing;
    p.v = numerics::radial_laplacian(p.h, spacing, params.dim());
    p.v[n - 1] = 3.0 * p.v[n - 2] - 3.0 * p.v[n - 3] + p.v[n - 4];
    p.config.R = p.r.back();
    p.config.nodes = static_cast<int>(n);
    return p;
  }
};

inline std::vector<double> uniform_radial_grid(double radius, int nodes) {
  std::vector<double> r(static_cast<std::size_t>(nodes));
  const double h = radius / (nodes - 1);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<double>(i) * h;
  return r;
}

/// The map T discretised on a fixed radial grid.
///
/// Row i of each weight matrix integrates over the sub-grid [0, r_i] with
/// composite Simpson (3/8 rule on the last three panels when the panel count
/// is odd), so T(g)(r_i) depends on g only on [0, r_i].
class PicardOperator {
 public:
  PicardOperator(const KernelParams& params, double c2, double c4, std::span<const double> r)
      : params_(params), c2_(c2), c4_(c4), r_(r.begin(), r.end()) {
    if (r_.size() < 3) throw InvalidInput("PicardOperator: need at least 3 nodes");
    const double h = r_[1] - r_[0];
    const std::size_t n = r_.size();
    kernel_.assign(n * (n + 1) / 2, 0.0);
    slope_.assign(kernel_.size(), 0.0);
    laplace_.assign(kernel_.size(), 0.0);
    const double beta = params_.beta();
    const double kappa = params_.kappa();
    const auto laplace_kernel = [&](double tau, double r) {
      return kappa * kernels::g1_kernel(tau, r, params_) - beta * tau;
    };
    // Row 1: Simpson on [0, r_1] with the midpoint value of g^{-1/3} taken from
    // the even interpolant a + b r^2 through nodes 0 and 1.
    {
      const double mid = 0.5 * r_[1];
      const auto fill = [&](std::vector<double>& out, auto kernel) {
        const double km = kernel(mid, r_[1]);
        out[offset(1)] = h / 6.0 * (kernel(0.0, r_[1]) + 3.0 * km);
        out[offset(1) + 1] = h / 6.0 * (kernel(r_[1], r_[1]) + km);
      };
      fill(kernel_, [&](double t, double x) { return kernels::g_kernel(t, x, params_); });
      fill(slope_, [&](double t, double x) { return kernels::g_kernel_dr(t, x, params_); });
      fill(laplace_, laplace_kernel);
    }
    for (std::size_t i = 2; i < n; ++i) {
      const auto w = numerics::simpson_weights(i + 1, numerics::EndRule::simpson38);
      const std::size_t row = offset(i);
      for (std::size_t j = 0; j <= i; ++j) {
        const double wj = w[j] * h;
        kernel_[row + j] = wj * kernels::g_kernel(r_[j], r_[i], params_);
        slope_[row + j] = wj * kernels::g_kernel_dr(r_[j], r_[i], params_);
        laplace_[row + j] = wj * laplace_kernel(r_[j], r_[i]);
      }
    }
  }

  std::size_t size() const noexcept { return r_.size(); }
  std::span<const double> grid() const noexcept { return r_; }

  /// T(g) at every node.
  std::vector<double> apply(std::span<const double> g) const {
    return contract(kernel_, g, [&](std::size_t i) { return c4_ + c2_ * r_[i] * r_[i]; });
  }

  /// (T g)'(r) = 2 c2 r + int_0^r dG/dr(tau, r) g^{-1/3} dtau.
  std::vector<double> derivative(std::span<const double> g) const {
    return contract(slope_, g, [&](std::size_t i) { return 2.0 * c2_ * r_[i]; });
  }

  /// Radial Laplacian of T(g):
  ///   2 N c2 - beta int_0^r s g^{-1/3} ds + kappa int_0^r G1(tau, r) g^{-1/3} dtau.
  std::vector<double> laplacian(std::span<const double> g) const {
    const double base = 2.0 * params_.dim() * c2_;
    return contract(laplace_, g, [&](std::size_t) { return base; });
  }

 private:
  static std::size_t offset(std::size_t i) noexcept { return i * (i + 1) / 2; }

  template <typename Base>
  std::vector<double> contract(const std::vector<double>& weights, std::span<const double> g,
                               Base base) const {
    if (g.size() != r_.size()) throw InvalidInput("PicardOperator: size mismatch");
    std::vector<double> inv_f(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) inv_f[j] = 1.0 / std::cbrt(g[j]);
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double* w = weights.data() + offset(i);
      double s = 0.0;
      for (std::size_t j = 0; j <= i; ++j) s += w[j] * inv_f[j];
      out[i] = base(i) + s;
    }
    return out;
  }

  KernelParams params_;
  double c2_;
  double c4_;
  std::vector<double> r_;
  std::vector<double> kernel_;
  std::vector<double> slope_;
  std::vector<double> laplace_;
};

namespace detail {

inline void require_lower_bound(const RadialProfile& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double bound = g.lower_envelope(i);
    if (!(g.h[i] >= bound - 1e-12 * std::max(1.0, bound))) {
      throw DomainError("profile violates the lower envelope c4 + c2 r^2 at r = " +
                        format_number(g.r[i]));
    }
  }
}

struct IterationResult {
  std::vector<double> h;
  int iterations = 0;
  std::vector<double> history;
};

inline IterationResult iterate(const PicardOperator& op, std::vector<double> h,
                               const PicardConfig& cfg) {
  IterationResult res;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const auto th = op.apply(h);
    const double d = numerics::max_abs_diff(h, th);
    res.history.push_back(d);
    if (!std::isfinite(d)) break;
    if (d <= cfg.tol) {
      res.h = std::move(h);
      res.iterations = it;
      return res;
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
      h[i] = (1.0 - cfg.damping) * h[i] + cfg.damping * th[i];
    }
  }
  throw NonConvergence("Picard iteration did not reach tol = " + format_number(cfg.tol) +
                           " within " + std::to_string(cfg.max_iter) + " iterations",
                       std::move(res.history));
}

inline RadialProfile finish(const PicardOperator& op, const KernelParams& params, double c2,
                            double c4, const PicardConfig& cfg, IterationResult it) {
  RadialProfile p{.r = std::vector<double>(op.grid().begin(), op.grid().end()),
                  .h = std::move(it.h),
                  .v = {},
                  .params = params,
                  .c2 = c2,
                  .c4 = c4,
                  .config = cfg,
                  .iterations = it.iterations,
                  .defect = it.history.back(),
                  .defect_history = std::move(it.history)};
  p.v = op.laplacian(p.h);
  return p;
}

}  // namespace detail

/// One application of T to an admissible profile g, on g's grid.
inline RadialProfile picard_apply(const RadialProfile& g, const PicardConfig& cfg) {
  g.params.require_positivity_range();
  if (g.size() != static_cast<std::size_t>(cfg.nodes) ||
      std::abs(g.R() - cfg.R) > 1e-12 * std::max(1.0, cfg.R)) {
    throw InvalidInput("picard_apply: profile grid does not match the configuration");
  }
  detail::require_lower_bound(g);
  const PicardOperator op(g.params, g.c2, g.c4, g.r);
  RadialProfile out = g;
  out.h = op.apply(g.h);
  out.v = op.laplacian(g.h);
  out.config = cfg;
  out.iterations = 1;
  out.defect = numerics::max_abs_diff(g.h, out.h);
  out.defect_history = {out.defect};
  return out;
}

/// Damped Picard iteration from the lower envelope h0 = c4 + c2 r^2 until
/// ||h - T(h)||_inf <= tol. Throws NonConvergence with the defect history.
inline RadialProfile solve_profile(const PicardConfig& cfg, const KernelParams& params, double c2,
                                   double c4) {
  cfg.validate();
  params.require_positivity_range();
  if (!(c2 > 0.0)) throw DomainError("solve_profile: c2 must be strictly positive");
  if (!(c4 > 0.0)) throw DomainError("solve_profile: c4 must be strictly positive");
  const auto r = uniform_radial_grid(cfg.R, cfg.nodes);
  const PicardOperator op(params, c2, c4, r);
  std::vector<double> h0(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) h0[i] = c4 + c2 * r[i] * r[i];
  return detail::finish(op, params, c2, c4, cfg, detail::iterate(op, std::move(h0), cfg));
}

/// Re-solves on [0, new_R] with the same spacing, starting from the old
/// solution (quadratically extrapolated past the old end point).
inline RadialProfile extend_profile(const RadialProfile& h, double new_R) {
  const double spacing = h.spacing();
  if (!(new_R >= h.R() - 1e-12 * h.R())) {
    throw DomainError("extend_profile: new_R must not be smaller than the current R");
  }
  const double steps = std::round(new_R / spacing);
  if (std::abs(steps * spacing - new_R) > 1e-9 * new_R) {
    throw InvalidInput("extend_profile: new_R must be a multiple of the grid spacing");
  }
  PicardConfig cfg = h.config;
  cfg.nodes = static_cast<int>(steps) + 1;
  cfg.R = steps * spacing;
  cfg.damping = std::min(cfg.damping, PicardConfig::default_damping(cfg.R));
  cfg.validate();

  const auto r = uniform_radial_grid(cfg.R, cfg.nodes);
  std::vector<double> guess(r.size());
  const std::size_t old_n = h.size();
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i < old_n) {
      guess[i] = h.h[i];
    } else {
      // Quadratic through the last three old nodes, in units of the spacing.
      const double t = static_cast<double>(i - (old_n - 1));
      const double a = h.h[old_n - 3], b = h.h[old_n - 2], c = h.h[old_n - 1];
      guess[i] = c + t * (1.5 * c - 2.0 * b + 0.5 * a) + 0.5 * t * t * (a - 2.0 * b + c);
    }
    guess[i] = std::max(guess[i], h.c4 + h.c2 * r[i] * r[i]);
  }
  const PicardOperator op(h.params, h.c2, h.c4, r);
  try {
    return detail::finish(op, h.params, h.c2, h.c4, cfg, detail::iterate(op, std::move(guess), cfg));
  } catch (const NonConvergence& e) {
    throw NonConvergence("extend_profile: no convergence at R = " + format_number(cfg.R) +
                             "; retry with stronger damping (a smaller damping factor)",
                         e.history());
  }
}

/// Successive defect ratios d_{n+1} / d_n of a Picard run.
inline std::vector<double> contraction_ratios(std::span<const double> history) {
  std::vector<double> out;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i - 1] > 0.0) out.push_back(history[i] / history[i - 1]);
  }
  return out;
}

/// Coefficient c of the explicit solution f(y) = c |y|: c^4 = 1 / (12 (N-1)(N+1)).
inline double exact_linear_coefficient(int dim) {
  if (dim < 2) throw DomainError("exact_linear_coefficient: N must be >= 2");
  return std::pow(12.0 * (dim - 1.0) * (dim + 1.0), -0.25);
}

// ---------------------------------------------------------------------------
// Residuals

struct OdeResidual {
  std::vector<double> res1;  ///< Laplacian_h(h) - v, zero outside the checked range
  std::vector<double> res2;  ///< Laplacian_h(v) - source(f), zero outside the checked range
  double max_res1 = 0.0;
  double max_res2 = 0.0;
};

/// Residuals of the radial second-order system
///   h'' + (N-1)/r h' = v,
///   v'' + (N-1)/r v' = -beta r (1/f)' - (4 beta - 1)/(4 f),
/// over nodes 2 .. n-3 (two nodes dropped at each end).
inline OdeResidual ode_residual(const RadialProfile& p) {
  const std::size_t n = p.size();
  if (n < 5) throw InvalidInput("ode_residual: need at least 5 nodes");
  const double dr = p.spacing();
  const int dim = p.params.dim();
  const double beta = p.params.beta();
  const auto lap_h = numerics::radial_laplacian(p.h, dr, dim);
  const auto lap_v = numerics::radial_laplacian(p.v, dr, dim);
  OdeResidual out;
  out.res1.assign(n, 0.0);
  out.res2.assign(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double inv_f = 1.0 / p.f(i);
    const double d_inv_f = (1.0 / p.f(i + 1) - 1.0 / p.f(i - 1)) / (2.0 * dr);
    const double source = -beta * p.r[i] * d_inv_f - (4.0 * beta - 1.0) / 4.0 * inv_f;
    out.res1[i] = lap_h[i] - p.v[i];
    out.res2[i] = lap_v[i] - source;
    out.max_res1 = std::max(out.max_res1, std::abs(out.res1[i]));
    out.max_res2 = std::max(out.max_res2, std::abs(out.res2[i]));
  }
  return out;
}

struct SpacetimeSample {
  std::vector<double> x;  ///< point in R^N
  double t = 1.0;
};

/// Radial profile evaluator used by spacetime_residual.
template <typename S>
concept RadialSolution = requires(const S& s, double y) {
  { s.f(y) } -> std::convertible_to<double>;
  { s.bilaplacian_h(y) } -> std::convertible_to<double>;
  { s.radius() } -> std::convertible_to<double>;
  { S::analytic } -> std::convertible_to<bool>;
};

/// The explicit solution f = c r with closed-form derivatives.
struct LinearExactSolution {
  static constexpr bool analytic = true;
  int dim;
  double c;

  double f(double y) const noexcept { return c * y; }
  double df(double) const noexcept { return c; }
  /// Laplacian^2 (c^3 r^3) = 3 (N+1)(N-1) c^3 / r.
  double bilaplacian_h(double y) const noexcept {
    return 3.0 * (dim + 1.0) * (dim - 1.0) * c * c * c / y;
  }
  double radius() const noexcept { return std::numeric_limits<double>::infinity(); }
};

/// Grid profile: f from cubic interpolation of h, Laplacian^2 h from cubic
/// interpolation of the discrete radial Laplacian of v.
class GridRadialSolution {
 public:
  static constexpr bool analytic = false;

  explicit GridRadialSolution(const RadialProfile& p)
      : h_(p.h), bilap_(numerics::radial_laplacian(p.v, p.spacing(), p.params.dim())),
        spacing_(p.spacing()) {
    if (p.size() < 8) throw InvalidInput("GridRadialSolution: need at least 8 nodes");
    // No Laplacian is formed at the last node; drop it so no stencil reaches it.
    bilap_.pop_back();
    radius_ = p.r[p.size() - 2];
  }

  double f(double y) const { return std::cbrt(numerics::cubic_interpolate(h_, spacing_, y)); }
  double bilaplacian_h(double y) const {
    return numerics::cubic_interpolate(bilap_, spacing_, y);
  }
  double radius() const noexcept { return radius_; }

 private:
  std::vector<double> h_;
  std::vector<double> bilap_;
  double spacing_;
  double radius_ = 0.0;
};

/// max over samples of |d_t rho + rho^2 Laplacian^2 rho^3| / |rho^2 Laplacian^2 rho^3|
/// for rho(x, t) = t^alpha f(|x| / t^beta).
///
/// The time derivative is analytic for analytic solutions and a centred
/// difference (step 1e-5 t) of the ansatz otherwise.
template <RadialSolution S>
double spacetime_residual(const S& sol, const KernelParams& params,
                          std::span<const SpacetimeSample> samples) {
  const double alpha = params.alpha();
  const double beta = params.beta();
  const auto similarity = [&](double radius, double t) {
    const double y = radius / std::pow(t, beta);
    if (!(y >= 0.0) || y > sol.radius()) {
      throw DomainError("spacetime_residual: sample outside the profile's radial range");
    }
    return y;
  };
  double worst = 0.0;
  for (const auto& s : samples) {
    if (static_cast<int>(s.x.size()) != params.dim()) {
      throw InvalidInput("spacetime_residual: sample point has the wrong dimension");
    }
    if (!(s.t > 0.0)) throw DomainError("spacetime_residual: t must be positive");
    double radius = 0.0;
    for (double c : s.x) radius += c * c;
    radius = std::sqrt(radius);
    const double y = similarity(radius, s.t);
    const double f = sol.f(y);
    const double spatial = std::pow(s.t, 5.0 * alpha - 4.0 * beta) * f * f * sol.bilaplacian_h(y);
    double dt_rho = 0.0;
    if constexpr (S::analytic) {
      dt_rho = std::pow(s.t, alpha - 1.0) * (alpha * f - beta * y * sol.df(y));
    } else {
      const double dt = 1e-5 * s.t;
      const auto rho = [&](double t) { return std::pow(t, alpha) * sol.f(similarity(radius, t)); };
      dt_rho = (rho(s.t + dt) - rho(s.t - dt)) / (2.0 * dt);
    }
    worst = std::max(worst, std::abs(dt_rho + spatial) / std::abs(spatial));
  }
  return worst;
}

inline double spacetime_residual(const RadialProfile& p, std::span<const SpacetimeSample> samples) {
  return spacetime_residual(GridRadialSolution(p), p.params, samples);
}

/// max over sampled r of |f^2 Laplacian^2 f^3 - f/4| / |f^2 Laplacian^2 f^3|
/// (the time-independent equation that the similarity equation reduces to at beta = 0).
inline double stationary_residual(const RadialProfile& p, std::span<const double> radii) {
  const GridRadialSolution sol(p);
  double worst = 0.0;
  for (double y : radii) {
    const double f = sol.f(y);
    const double lhs = f * f * sol.bilaplacian_h(y);
    worst = std::max(worst, std::abs(lhs - 0.25 * f) / std::abs(lhs));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Growth bounds and weak form

struct TheoremBounds {
  bool lower_bound_holds = true;
  double min_margin = 0.0;            ///< min over nodes of h - (c4 + c2 r^2)
  double empirical_c = 0.0;           ///< sup over r >= h_r of (h - c4 - c2 r^2) / r^4
  std::vector<double> ratios;         ///< per-node ratio, zero at r = 0
};

/// Checks c4 + c2 r^2 <= h (tolerance 1e-10) and measures the r^4 growth constant.
inline TheoremBounds check_theorem_bounds(const RadialProfile& p) {
  TheoremBounds b;
  b.min_margin = std::numeric_limits<double>::infinity();
  b.ratios.assign(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double excess = p.h[i] - p.lower_envelope(i);
    b.min_margin = std::min(b.min_margin, excess);
    if (excess < -1e-10) b.lower_bound_holds = false;
    if (i == 0) continue;
    const double r4 = std::pow(p.r[i], 4);
    b.ratios[i] = excess / r4;
    b.empirical_c = std::max(b.empirical_c, b.ratios[i]);
  }
  return b;
}

/// Derivative (T h)' of the map at the profile, from the differentiated kernel.
inline std::vector<double> picard_derivative(const RadialProfile& p) {
  const PicardOperator op(p.params, p.c2, p.c4, p.r);
  return op.derivative(p.h);
}

/// Relative defect of the weak form
///   int Lap(f^3) Lap(f^3 xi) + beta/2 int f^2 y.grad(xi) + ((4+2N) beta - 1)/4 int f^2 xi = 0
/// for a radial C-infinity bump xi supported in (0.2 R, 0.8 R); radial measure r^{N-1} dr.
/// Returns |sum of terms| / sum of |terms|.
inline double weak_form_defect(const RadialProfile& p) {
  const std::size_t n = p.size();
  const double dr = p.spacing();
  const double R = p.R();
  const int dim = p.params.dim();
  const double beta = p.params.beta();
  const double centre = 0.5 * R;
  const double half = 0.3 * R;
  std::vector<double> t1(n, 0.0), t2(n, 0.0), t3(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double r = p.r[i];
    const double s = (r - centre) / half;
    if (std::abs(s) >= 1.0) continue;
    // xi = exp(-1/(1-s^2)) and its first two derivatives in r.
    const double q = 1.0 - s * s;
    const double xi = std::exp(-1.0 / q);
    const double dxi_ds = xi * (-2.0 * s / (q * q));
    const double d2xi_ds2 = xi * ((4.0 * s * s) / (q * q * q * q) - (2.0 + 6.0 * s * s) / (q * q * q));
    const double dxi = dxi_ds / half;
    const double d2xi = d2xi_ds2 / (half * half);
    const double lap_xi = d2xi + (dim - 1) / r * dxi;
    const double dh = (p.h[i + 1] - p.h[i - 1]) / (2.0 * dr);
    const double lap_hxi = p.v[i] * xi + 2.0 * dh * dxi + p.h[i] * lap_xi;
    const double f = p.f(i);
    const double measure = std::pow(r, dim - 1);
    t1[i] = p.v[i] * lap_hxi * measure;
    t2[i] = 0.5 * beta * f * f * r * dxi * measure;
    t3[i] = ((4.0 + 2.0 * dim) * beta - 1.0) / 4.0 * f * f * xi * measure;
  }
  const double a = numerics::trapezoid(t1, dr);
  const double b = numerics::trapezoid(t2, dr);
  const double c = numerics::trapezoid(t3, dr);
  const double scale = std::abs(a) + std::abs(b) + std::abs(c);
  return scale > 0.0 ? std::abs(a + b + c) / scale : 0.0;
}

}  // namespace crystal::selfsimilar
