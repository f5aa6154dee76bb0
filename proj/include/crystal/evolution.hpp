#pragma once

// Separable solutions rho(x, t) = A(t) psi(x) of d_t rho + rho^2 Lap^2 rho^3 = 0.
//
// If psi Lap^2 psi^3 = lambda then A' = -lambda A^5, so
//   A(t) = (A0^{-4} + 4 lambda t)^{-1/4}.
// The module checks the amplitude law, the product-form residual, the decay
// of the W^{2,2} norm and compares with a direct method-of-lines integration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "crystal/elliptic.hpp"
#include "crystal/error.hpp"
#include "crystal/numerics.hpp"

namespace crystal::evolution {

using elliptic::EllipticState;
using numerics::Field;
using numerics::Grid;

struct AmplitudeParams {
  double A0 = 1.0;
  double lambda = 1.0;

  void validate() const {
    if (!(A0 > 0.0) || !std::isfinite(A0)) throw DomainError("AmplitudeParams: A0 must be positive");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw DomainError("AmplitudeParams: lambda must be positive");
    }
  }
};

inline double amplitude(double t, const AmplitudeParams& p) {
  if (!(t >= 0.0)) throw DomainError("amplitude: t must be nonnegative");
  return std::pow(std::pow(p.A0, -4.0) + 4.0 * p.lambda * t, -0.25);
}

/// Derivative of the closed form, -lambda (A0^{-4} + 4 lambda t)^{-5/4}.
inline double amplitude_derivative(double t, const AmplitudeParams& p) {
  if (!(t >= 0.0)) throw DomainError("amplitude_derivative: t must be nonnegative");
  return -p.lambda * std::pow(std::pow(p.A0, -4.0) + 4.0 * p.lambda * t, -1.25);
}

/// max over margin nodes and times of |d_t rho + rho^2 Lap_h^2 rho^3| for rho = A(t) psi,
/// with d_t rho = -lambda A^5 psi, normalised by max |d_t rho| over all nodes and times.
inline double separation_residual(const EllipticState& s, std::span<const double> times,
                                  double A0 = 1.0, double margin = 0.2) {
  if (times.empty()) throw InvalidInput("separation_residual: times must not be empty");
  const Grid& g = *s.grid;
  const auto nodes = elliptic::margin_nodes(g, margin);
  if (nodes.empty()) throw InvalidInput("separation_residual: margin leaves no nodes");
  if (s.lambda == 0.0) return 0.0;
  const AmplitudeParams p{A0, s.lambda};
  p.validate();
  const double psi_max = numerics::max_abs(s.psi.values);
  double worst = 0.0;
  double scale = 0.0;
  std::vector<double> cube(g.size());
  for (double t : times) {
    const double a = amplitude(t, p);
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double rho = a * s.psi[n];
      cube[n] = rho * rho * rho;
    }
    const auto bilap = elliptic::bilaplacian_values(g, cube);
    const double a5 = std::pow(a, 5.0);
    scale = std::max(scale, s.lambda * a5 * psi_max);
    for (std::size_t n : nodes) {
      const double rho = a * s.psi[n];
      const double dt_rho = -s.lambda * a5 * s.psi[n];
      worst = std::max(worst, std::abs(dt_rho + rho * rho * bilap[n]));
    }
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

/// Discrete W^{2,2} norm: sqrt(int u^2 + int |grad u|^2 + int (Lap_h u)^2).
inline double w22_norm(const Grid& g, std::span<const double> u) {
  const auto grad = numerics::gradient_squared(g, u);
  const auto lap = numerics::laplacian_values(g, u);
  std::vector<double> sum(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) sum[n] = u[n] * u[n] + grad[n] + lap[n] * lap[n];
  return std::sqrt(numerics::integrate(g, sum));
}

struct DecayRow {
  double t = 0.0;
  double norm = 0.0;    ///< ||A(t) psi||_{W^{2,2},h}
  double scaled = 0.0;  ///< norm * (A0^{-4} + 4 lambda t)^{1/4}
};

struct DecayTable {
  std::vector<DecayRow> rows;
  double c1 = 0.0;                  ///< ||psi||_{W^{2,2},h}: norm <= c1 / (c2 + 4 lambda t)^{1/4}
  double c2 = 0.0;                  ///< A0^{-4}
  double relative_variation = 0.0;  ///< (max - min) / max of the scaled column
};

inline DecayTable decay_norm_check(const EllipticState& s, std::span<const double> times,
                                   double A0 = 1.0) {
  const AmplitudeParams p{A0, s.lambda};
  p.validate();
  const Grid& g = *s.grid;
  DecayTable out;
  out.c1 = w22_norm(g, s.psi.values);
  out.c2 = std::pow(A0, -4.0);
  std::vector<double> rho(g.size());
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double t : times) {
    const double a = amplitude(t, p);
    for (std::size_t n = 0; n < g.size(); ++n) rho[n] = a * s.psi[n];
    DecayRow r;
    r.t = t;
    r.norm = w22_norm(g, rho);
    r.scaled = r.norm * std::pow(out.c2 + 4.0 * s.lambda * t, 0.25);
    lo = std::min(lo, r.scaled);
    hi = std::max(hi, r.scaled);
    out.rows.push_back(r);
  }
  out.relative_variation = hi > 0.0 ? (hi - lo) / hi : 0.0;
  return out;
}

/// Time at which A(t) = A0 / 2, by bracketing root search on the closed form.
inline double half_amplitude_time(const AmplitudeParams& p) {
  p.validate();
  const auto f = [&](double t) { return amplitude(t, p) - 0.5 * p.A0; };
  double hi = 1.0 / (p.lambda * std::pow(p.A0, 4.0));
  while (f(hi) > 0.0) hi *= 2.0;
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Method of lines

struct MolOptions {
  double A0 = 1.0;
  double safety = 0.5;  ///< fraction of the explicit stability limit used per step
  int samples = 10;     ///< trajectory snapshots after t = 0
  long max_steps = 50'000'000;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> rho;
  std::vector<double> deviation;  ///< max_n |rho - A(t) psi| at each sample
  double max_deviation = 0.0;
  long steps = 0;
  long rejected = 0;
};

/// Forward Euler for d_t rho = -rho^2 Lap_h^2 rho^3 on nodes at least two steps
/// from the boundary. The two outer rings follow the product solution A(t) psi.
///
/// The step is min(dt, safety * limit) with limit = h^4 / (c_d 3 max rho^4),
/// c_d = 8 in 1-D and 32 in 2-D; a step producing negative rho is halved and retried.
inline Trajectory evolve_mol(const EllipticState& s, double t_end, double dt,
                             const MolOptions& opt = {}) {
  if (!(t_end > 0.0)) throw DomainError("evolve_mol: t_end must be positive");
  if (!(dt > 0.0)) throw DomainError("evolve_mol: dt must be positive");
  if (opt.samples < 1) throw InvalidInput("evolve_mol: samples must be >= 1");
  const Grid& g = *s.grid;
  const double h = g.spacing();
  const double h4 = h * h * h * h;
  const double stencil = g.dim() == 1 ? 8.0 : 32.0;
  const bool frozen_problem = s.lambda == 0.0;
  const AmplitudeParams p{opt.A0, frozen_problem ? 1.0 : s.lambda};
  p.validate();
  const auto product = [&](double t, std::size_t n) {
    return frozen_problem ? opt.A0 * s.psi[n] : amplitude(t, p) * s.psi[n];
  };

  std::vector<std::size_t> evolved, pinned;
  for (std::size_t n = 0; n < g.size(); ++n) {
    (g.boundary_distance(n) >= 2 ? evolved : pinned).push_back(n);
  }

  Trajectory out;
  std::vector<double> rho(g.size()), next(g.size()), cube(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) rho[n] = product(0.0, n);
  const auto record = [&](double t) {
    double dev = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) dev = std::max(dev, std::abs(rho[n] - product(t, n)));
    out.times.push_back(t);
    out.rho.push_back(rho);
    out.deviation.push_back(dev);
    out.max_deviation = std::max(out.max_deviation, dev);
  };
  record(0.0);

  double t = 0.0;
  const double floor = 1e-14 * t_end;
  for (int sample = 1; sample <= opt.samples; ++sample) {
    const double t_sample = t_end * sample / opt.samples;
    while (t < t_sample) {
      if (++out.steps > opt.max_steps) {
        throw StepUnderflow("evolve_mol: step budget exhausted before t_end; use a smaller "
                            "t_end or a coarser grid");
      }
      for (std::size_t n = 0; n < g.size(); ++n) cube[n] = rho[n] * rho[n] * rho[n];
      const auto bilap = elliptic::bilaplacian_values(g, cube);
      double rho_max = 0.0;
      for (double x : rho) rho_max = std::max(rho_max, std::abs(x));
      const double limit = rho_max > 0.0 ? h4 / (stencil * 3.0 * std::pow(rho_max, 4.0))
                                         : std::numeric_limits<double>::infinity();
      double step = std::min({dt, opt.safety * limit, t_sample - t});
      while (true) {
        if (step < floor) {
          throw StepUnderflow("evolve_mol: time step underflow at t = " + format_number(t) +
                              "; use a smaller t_end or a coarser grid");
        }
        bool negative = false;
        for (std::size_t n : evolved) {
          next[n] = rho[n] - step * rho[n] * rho[n] * bilap[n];
          if (next[n] < 0.0) negative = true;
        }
        if (!negative) break;
        step *= 0.5;
        ++out.rejected;
      }
      t = (t_sample - t - step <= 1e-15 * t_end) ? t_sample : t + step;
      for (std::size_t n : evolved) rho[n] = next[n];
      for (std::size_t n : pinned) rho[n] = product(t, n);
    }
    record(t);
  }
  return out;
}

}  // namespace crystal::evolution
