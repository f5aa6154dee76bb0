#pragma once

// Regularised elliptic problem psi Lap^2 psi^3 = lambda on an interval or a
// rectangle, psi = 0 on the boundary.
//
// With eps = 1/k the problem is split into the coupled Dirichlet system
//   Lap v = lambda / (psi + eps),  Lap phi = v,  phi = (psi + eps)^3 - eps^3,
// and solved through the fixed-point map T(g) = psi given by
//   -Lap v = -lambda / (g+ + eps),  -div(3 (g+ + eps)^2 grad psi) = -v.
// Both linear operators are M-matrices, so psi >= 0 and v <= 0 hold exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crystal/error.hpp"
#include "crystal/numerics.hpp"

namespace crystal::elliptic {

using numerics::Field;
using numerics::Grid;
using numerics::GridPtr;

/// Geometric schedule 1, 2, 4, ..., max_k.
inline std::vector<double> geometric_schedule(double max_k) {
  if (!(max_k >= 1.0)) throw InvalidInput("geometric_schedule: max_k must be >= 1");
  std::vector<double> ks;
  for (double k = 1.0; k <= max_k * (1.0 + 1e-12); k *= 2.0) ks.push_back(k);
  return ks;
}

struct EllipticConfig {
  std::vector<double> k_schedule = geometric_schedule(1024.0);
  double inner_tol = 1e-12;
  int inner_max_iter = 2000;
  double damping = 0.3;       ///< psi <- (1-d) psi + d T(psi)
  int homotopy_steps = 0;     ///< > 0: step sigma through (0, 1] solving psi = sigma T(psi)

  void validate() const {
    if (k_schedule.empty()) throw InvalidInput("EllipticConfig: k_schedule must not be empty");
    for (std::size_t i = 0; i < k_schedule.size(); ++i) {
      if (!(k_schedule[i] > 0.0)) throw InvalidInput("EllipticConfig: k values must be positive");
      if (i > 0 && !(k_schedule[i] > k_schedule[i - 1])) {
        throw InvalidInput("EllipticConfig: k_schedule must be strictly increasing");
      }
    }
    if (!(inner_tol > 0.0)) throw InvalidInput("EllipticConfig: inner_tol must be positive");
    if (inner_max_iter < 1) throw InvalidInput("EllipticConfig: inner_max_iter must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) {
      throw InvalidInput("EllipticConfig: damping must lie in (0, 1]");
    }
    if (homotopy_steps < 0) throw InvalidInput("EllipticConfig: homotopy_steps must be >= 0");
  }
};

struct EllipticState {
  GridPtr grid;
  Field psi;
  Field v;
  Field phi;
  double k = 1.0;
  double lambda = 0.0;
  int iterations = 0;
  double defect = 0.0;
  std::vector<double> defect_history;
};

inline Field make_phi(const Field& psi, double k) {
  const double eps = 1.0 / k;
  Field phi = Field::zeros(psi.grid);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    const double s = psi[n] + eps;
    phi[n] = s * s * s - eps * eps * eps;
  }
  return phi;
}

namespace detail {

inline void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}

inline void require_same_grid(const Field& a, const GridPtr& g, const char* who) {
  if (a.size() != g->size()) {
    throw InvalidInput(std::string(who) + ": field does not live on the grid");
  }
}

/// -div(w grad u) with Dirichlet rows (identity) at boundary nodes.
/// w is a nodal weight; face weights are arithmetic means of the two nodes.
inline numerics::BandedMatrix divergence_operator(const Grid& g, std::span<const double> w) {
  const std::size_t n = g.size();
  const std::size_t stride = static_cast<std::size_t>(g.nodes_x());
  const std::size_t band = g.dim() == 2 ? stride : 1;
  numerics::BandedMatrix a(n, band, band);
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  for (std::size_t node = 0; node < n; ++node) {
    if (g.is_boundary(node)) {
      a.set(node, node, 1.0);
      continue;
    }
    auto couple = [&](std::size_t other) {
      const double face = 0.5 * (w[node] + w[other]) * inv_h2;
      a.add(node, node, face);
      a.add(node, other, -face);
    };
    couple(node - 1);
    couple(node + 1);
    if (g.dim() == 2) {
      couple(node - stride);
      couple(node + stride);
    }
  }
  return a;
}

inline std::vector<double> solve_dirichlet(const Grid& g, std::span<const double> weight,
                                           std::vector<double> rhs) {
  for (std::size_t node : g.boundary()) rhs[node] = 0.0;
  auto x = numerics::solve_banded(divergence_operator(g, weight), rhs);
  for (std::size_t node : g.boundary()) x[node] = 0.0;
  return x;
}

}  // namespace detail

/// Solves Lap v = lambda / (psi+ + 1/k) with v = 0 on the boundary; v <= 0.
inline Field poisson_v(const GridPtr& grid, const Field& psi, double k, double lambda) {
  detail::require_same_grid(psi, grid, "poisson_v");
  detail::require_positive(k, "poisson_v: k");
  if (!(lambda >= 0.0)) throw DomainError("poisson_v: lambda must be nonnegative");
  const std::size_t n = grid->size();
  const std::vector<double> ones(n, 1.0);
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = -lambda / (std::max(psi[i], 0.0) + 1.0 / k);
  return Field(grid, detail::solve_dirichlet(*grid, ones, std::move(rhs)));
}

/// Solves -div(3 (g+ + 1/k)^2 grad psi) = -v with psi = 0 on the boundary; psi >= 0 for v <= 0.
inline Field weighted_poisson_psi(const GridPtr& grid, const Field& g, const Field& v, double k) {
  detail::require_same_grid(g, grid, "weighted_poisson_psi");
  detail::require_same_grid(v, grid, "weighted_poisson_psi");
  detail::require_positive(k, "weighted_poisson_psi: k");
  const std::size_t n = grid->size();
  std::vector<double> w(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::max(g[i], 0.0) + 1.0 / k;
    w[i] = 3.0 * s * s;
    rhs[i] = -v[i];
  }
  return Field(grid, detail::solve_dirichlet(*grid, w, std::move(rhs)));
}

struct TMapResult {
  Field psi;
  Field v;
};

inline TMapResult T_map_with_v(const GridPtr& grid, const Field& g, double k, double lambda) {
  if (!g.finite()) throw InvalidInput("T_map: input field is not finite");
  Field v = poisson_v(grid, g, k, lambda);
  Field psi = weighted_poisson_psi(grid, g, v, k);
  return {std::move(psi), std::move(v)};
}

/// T(g): poisson_v followed by weighted_poisson_psi.
inline Field T_map(const GridPtr& grid, const Field& g, double k, double lambda) {
  return T_map_with_v(grid, g, k, lambda).psi;
}

namespace detail {

inline EllipticState picard(const GridPtr& grid, double k, double lambda, double sigma,
                            const EllipticConfig& cfg, Field psi) {
  std::vector<double> history;
  for (int it = 1; it <= cfg.inner_max_iter; ++it) {
    auto [t_psi, v] = T_map_with_v(grid, psi, k, lambda);
    if (sigma != 1.0) {
      for (auto& x : t_psi.values) x *= sigma;
      for (auto& x : v.values) x *= sigma;
    }
    const double d = numerics::max_abs_diff(psi.values, t_psi.values);
    history.push_back(d);
    if (!std::isfinite(d)) break;
    if (d <= cfg.inner_tol) {
      EllipticState s{.grid = grid,
                      .psi = t_psi,
                      .v = std::move(v),
                      .phi = make_phi(t_psi, k),
                      .k = k,
                      .lambda = lambda,
                      .iterations = it,
                      .defect = d,
                      .defect_history = std::move(history)};
      return s;
    }
    for (std::size_t i = 0; i < psi.size(); ++i) {
      psi[i] = (1.0 - cfg.damping) * psi[i] + cfg.damping * t_psi[i];
    }
  }
  throw NonConvergence("elliptic Picard iteration at k = " + format_number(k) +
                           " did not reach tol = " + format_number(cfg.inner_tol) + " within " +
                           std::to_string(cfg.inner_max_iter) + " iterations",
                       std::move(history));
}

}  // namespace detail

/// Damped Picard iteration on T from psi0 = 0 (or from a warm start) until
/// ||psi - T(psi)||_inf <= inner_tol. With homotopy_steps > 0 the fixed points of
/// sigma T are followed for sigma = 1/m, 2/m, ..., 1.
inline EllipticState solve_fixed_k(const GridPtr& grid, double k, double lambda,
                                   const EllipticConfig& cfg,
                                   const std::optional<Field>& warm_start = std::nullopt) {
  cfg.validate();
  detail::require_positive(k, "solve_fixed_k: k");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("solve_fixed_k: lambda must be nonnegative");
  }
  Field psi = warm_start ? *warm_start : Field::zeros(grid);
  detail::require_same_grid(psi, grid, "solve_fixed_k");
  if (cfg.homotopy_steps == 0) return detail::picard(grid, k, lambda, 1.0, cfg, std::move(psi));
  int total = 0;
  std::vector<double> history;
  for (int step = 1; step <= cfg.homotopy_steps; ++step) {
    const double sigma = static_cast<double>(step) / cfg.homotopy_steps;
    auto s = detail::picard(grid, k, lambda, sigma, cfg, std::move(psi));
    total += s.iterations;
    history.insert(history.end(), s.defect_history.begin(), s.defect_history.end());
    if (step == cfg.homotopy_steps) {
      s.iterations = total;
      s.defect_history = std::move(history);
      return s;
    }
    psi = s.psi;
  }
  throw InvalidInput("solve_fixed_k: unreachable");
}

struct ContinuationResult {
  std::vector<EllipticState> states;
  std::vector<double> distances;  ///< ||psi_{k_{j+1}} - psi_{k_j}||_inf
};

/// Solves along cfg.k_schedule, warm-starting each stage from the previous one.
inline ContinuationResult continuation(const GridPtr& grid, double lambda,
                                       const EllipticConfig& cfg) {
  cfg.validate();
  ContinuationResult out;
  for (std::size_t j = 0; j < cfg.k_schedule.size(); ++j) {
    const double k = cfg.k_schedule[j];
    std::optional<Field> warm;
    if (!out.states.empty()) warm = out.states.back().psi;
    try {
      out.states.push_back(solve_fixed_k(grid, k, lambda, cfg, warm));
    } catch (const NonConvergence& e) {
      throw NonConvergence("continuation stage " + std::to_string(j) + " (k = " +
                               format_number(k) + ") failed: " + e.what(),
                           e.history());
    }
    if (j > 0) {
      out.distances.push_back(numerics::max_abs_diff(out.states[j].psi.values,
                                                     out.states[j - 1].psi.values));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct EnergyBalance {
  double laplacian_phi_sq = 0.0;  ///< int (Lap_h phi)^2
  double v_sq = 0.0;              ///< int v^2
  double regular_term = 0.0;      ///< 2 lambda int 1 / (k^3 (psi + 1/k))
  double rhs = 0.0;               ///< 2 lambda int (psi + 1/k)^2
  double defect = 0.0;            ///< |lhs - rhs|
  double relative() const noexcept { return rhs > 0.0 ? defect / rhs : defect; }
};

/// Terms of the energy identity
///   int (Lap phi)^2 + int v^2 + 2 lambda int 1/(k^3 (psi + 1/k)) = 2 lambda int (psi + 1/k)^2,
/// all integrals by the trapezoid rule.
inline EnergyBalance energy_balance(const EllipticState& s) {
  const Grid& g = *s.grid;
  const auto lap_phi = numerics::laplacian_values(g, s.phi.values);
  const double eps = 1.0 / s.k;
  std::vector<double> a(g.size()), b(g.size()), c(g.size()), d(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double shifted = s.psi[n] + eps;
    a[n] = lap_phi[n] * lap_phi[n];
    b[n] = s.v[n] * s.v[n];
    c[n] = 2.0 * s.lambda * eps * eps * eps / shifted;
    d[n] = 2.0 * s.lambda * shifted * shifted;
  }
  EnergyBalance e;
  e.laplacian_phi_sq = numerics::integrate(g, a);
  e.v_sq = numerics::integrate(g, b);
  e.regular_term = numerics::integrate(g, c);
  e.rhs = numerics::integrate(g, d);
  e.defect = std::abs(e.laplacian_phi_sq + e.v_sq + e.regular_term - e.rhs);
  return e;
}

inline double energy_identity_defect(const EllipticState& s) { return energy_balance(s).defect; }

/// int phi^2 / int (Lap_h phi)^2 for a field vanishing on the boundary.
inline double poincare_ratio(const Field& phi) {
  const Grid& g = *phi.grid;
  const auto lap = numerics::laplacian_values(g, phi.values);
  std::vector<double> num(g.size()), den(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    num[n] = phi[n] * phi[n];
    den[n] = lap[n] * lap[n];
  }
  const double d = numerics::integrate(g, den);
  if (!(d > 0.0)) throw DomainError("poincare_ratio: undefined for a field with zero Laplacian");
  return numerics::integrate(g, num) / d;
}

inline double poincare_ratio(const EllipticState& s) { return poincare_ratio(s.phi); }

struct HarnackFloor {
  double inf_half_ball = 0.0;   ///< min of -v over B_{radius/2}(center)
  double mean_full_ball = 0.0;  ///< average of -v over the nodes of B_radius(center)
  double ratio() const noexcept { return mean_full_ball > 0.0 ? inf_half_ball / mean_full_ball : 0.0; }
};

/// Interior lower bound of the superharmonic quantity -v against its local mean.
/// center holds one coordinate per grid dimension.
inline HarnackFloor harnack_floor(const EllipticState& s, std::span<const double> center,
                                  double radius) {
  const Grid& g = *s.grid;
  if (static_cast<int>(center.size()) != g.dim()) {
    throw InvalidInput("harnack_floor: center has the wrong dimension");
  }
  if (!(radius > 0.0)) throw DomainError("harnack_floor: radius must be positive");
  const bool inside_x = center[0] - radius > g.lower_x() && center[0] + radius < g.upper_x();
  const bool inside_y = g.dim() == 1 ||
                        (center[1] - radius > g.lower_y() && center[1] + radius < g.upper_y());
  if (!inside_x || !inside_y) throw DomainError("harnack_floor: ball is not inside the domain");
  HarnackFloor out;
  out.inf_half_ball = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t count = 0;
  const double tol = 1e-12 * radius;
  for (std::size_t n = 0; n < g.size(); ++n) {
    double d2 = (g.x(n) - center[0]) * (g.x(n) - center[0]);
    if (g.dim() == 2) d2 += (g.y(n) - center[1]) * (g.y(n) - center[1]);
    const double dist = std::sqrt(d2);
    if (dist <= radius + tol) {
      sum += -s.v[n];
      ++count;
    }
    if (dist <= 0.5 * radius + tol) out.inf_half_ball = std::min(out.inf_half_ball, -s.v[n]);
  }
  if (count == 0 || !std::isfinite(out.inf_half_ball)) {
    throw DomainError("harnack_floor: ball contains no grid nodes");
  }
  out.mean_full_ball = sum / static_cast<double>(count);
  return out;
}

/// Nodes at distance >= margin * (domain width) from the boundary in every direction.
inline std::vector<std::size_t> margin_nodes(const Grid& g, double margin) {
  if (!(margin >= 0.0 && margin < 0.5)) throw InvalidInput("margin must lie in [0, 0.5)");
  std::vector<std::size_t> out;
  const double mx = margin * (g.upper_x() - g.lower_x());
  const double my = margin * (g.upper_y() - g.lower_y());
  const double tol = 1e-12 * g.spacing();
  for (std::size_t n : g.interior()) {
    if (g.boundary_distance(n) < 2) continue;
    if (g.x(n) < g.lower_x() + mx - tol || g.x(n) > g.upper_x() - mx + tol) continue;
    if (g.dim() == 2 && (g.y(n) < g.lower_y() + my - tol || g.y(n) > g.upper_y() - my + tol)) {
      continue;
    }
    out.push_back(n);
  }
  return out;
}

/// Lap_h (Lap_h u) at interior nodes whose full stencil is available.
inline std::vector<double> bilaplacian_values(const Grid& g, std::span<const double> u) {
  const auto first = numerics::laplacian_values(g, u);
  return numerics::laplacian_values(g, first);
}

/// max over retained nodes of |psi Lap_h(Lap_h psi^3) - lambda(x)|.
inline double interior_residual(const Field& psi, std::span<const double> lambda_field,
                                 double margin) {
  const Grid& g = *psi.grid;
  if (lambda_field.size() != g.size()) throw InvalidInput("interior_residual: size mismatch");
  if (g.interior().size() < 9) throw InvalidInput("interior_residual: need >= 9 interior nodes");
  const auto nodes = margin_nodes(g, margin);
  if (nodes.empty()) throw InvalidInput("interior_residual: margin leaves no nodes");
  std::vector<double> cube(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) cube[n] = psi[n] * psi[n] * psi[n];
  const auto bilap = bilaplacian_values(g, cube);
  double worst = 0.0;
  for (std::size_t n : nodes) worst = std::max(worst, std::abs(psi[n] * bilap[n] - lambda_field[n]));
  return worst;
}

inline double interior_residual(const EllipticState& s, double margin) {
  return interior_residual(s.psi, std::vector<double>(s.grid->size(), s.lambda), margin);
}

struct BlowupRow {
  double k = 0.0;
  double D = 0.0;  ///< 3 lambda int |grad psi|^2 + int |grad v|^2
  double B = 0.0;  ///< -lambda k int v
};

inline std::vector<BlowupRow> gradient_blowup_diagnostic(std::span<const EllipticState> states) {
  std::vector<BlowupRow> rows;
  for (const auto& s : states) {
    const Grid& g = *s.grid;
    const auto gp = numerics::gradient_squared(g, s.psi.values);
    const auto gv = numerics::gradient_squared(g, s.v.values);
    BlowupRow r;
    r.k = s.k;
    r.D = 3.0 * s.lambda * numerics::integrate(g, gp) + numerics::integrate(g, gv);
    r.B = -s.lambda * s.k * numerics::integrate(g, s.v.values);
    rows.push_back(r);
  }
  return rows;
}

/// max |Lap_h psi^3| over interior nodes adjacent to the boundary. Recorded as
/// data only: the limiting boundary behaviour of Lap psi^3 is not known.
inline double boundary_trace(const EllipticState& s) {
  const Grid& g = *s.grid;
  std::vector<double> cube(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) cube[n] = s.psi[n] * s.psi[n] * s.psi[n];
  const auto lap = numerics::laplacian_values(g, cube);
  double worst = 0.0;
  for (std::size_t n : g.interior()) {
    if (g.boundary_distance(n) == 1) worst = std::max(worst, std::abs(lap[n]));
  }
  return worst;
}

}  // namespace crystal::elliptic
