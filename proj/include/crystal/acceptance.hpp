#pragma once

// Acceptance criteria 1-12 as callable checks, shared by the acceptance
// binary and the `verify` command. Each check returns one pass/fail record.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crystal/elliptic.hpp"
#include "crystal/evolution.hpp"
#include "crystal/io.hpp"
#include "crystal/kernels.hpp"
#include "crystal/selfsimilar.hpp"

namespace crystal::acceptance {

struct Options {
  bool quick = false;
  std::uint64_t seed = 1;
};

struct CriterionResult {
  int id = 0;
  std::string name{};
  bool pass = false;
  std::string detail{};
  double seconds = 0.0;
  double budget = 0.0;  ///< runtime budget in seconds
};

namespace detail {

inline std::string fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

/// Lazily computed 1-D continuation shared by several criteria.
class Context {
 public:
  explicit Context(const Options& o) : opt(o) {}

  const elliptic::ContinuationResult& continuation_1d() {
    if (!cont_) {
      elliptic::EllipticConfig cfg;
      cfg.k_schedule = elliptic::geometric_schedule(256.0);
      auto g = numerics::make_grid(numerics::Grid::interval(0.0, 1.0, 64));
      cont_ = elliptic::continuation(g, 1.0, cfg);
    }
    return *cont_;
  }

  Options opt;

 private:
  std::optional<elliptic::ContinuationResult> cont_;
};

inline std::vector<selfsimilar::SpacetimeSample> similarity_samples(int dim, double beta,
                                                                    double lo, double hi,
                                                                    int count,
                                                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> y_dist(lo, hi), t_dist(0.5, 2.0);
  std::normal_distribution<double> dir(0.0, 1.0);
  std::vector<selfsimilar::SpacetimeSample> out;
  for (int i = 0; i < count; ++i) {
    const double t = t_dist(rng);
    const double radius = y_dist(rng) * std::pow(t, beta);
    std::vector<double> x(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (auto& c : x) {
      c = dir(rng);
      norm += c * c;
    }
    norm = std::sqrt(norm);
    for (auto& c : x) c *= radius / norm;
    out.push_back({std::move(x), t});
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline CriterionResult exact_solution_oracle(detail::Context& ctx) {
  CriterionResult r{.id = 1, .name = "exact-solution oracle", .budget = 5.0};
  std::mt19937_64 rng(ctx.opt.seed);
  double worst_analytic = 0.0;
  double worst_order = std::numeric_limits<double>::infinity();
  for (int dim : {2, 3, 5}) {
    const double c = selfsimilar::exact_linear_coefficient(dim);
    const kernels::KernelParams params(dim, -1.0 / (8.0 * (dim - 1)));
    const auto samples = detail::similarity_samples(dim, params.beta(), 0.1, 0.9, 20, rng);
    worst_analytic = std::max(
        worst_analytic,
        selfsimilar::spacetime_residual(selfsimilar::LinearExactSolution{dim, c}, params, samples));
    double previous = 0.0;
    for (int nodes : {65, 129, 257}) {
      const double h = 1.0 / (nodes - 1);
      std::vector<double> hv(static_cast<std::size_t>(nodes));
      for (int i = 0; i < nodes; ++i) hv[i] = std::pow(c * i * h, 3);
      const auto p = selfsimilar::RadialProfile::from_samples(params, h, hv);
      const double res = selfsimilar::spacetime_residual(p, samples);
      if (previous > 0.0) worst_order = std::min(worst_order, detail::order(previous, res));
      previous = res;
    }
  }
  r.pass = worst_analytic <= 1e-10 && worst_order >= 1.8;
  r.detail = "analytic residual " + detail::fmt(worst_analytic) + " (<= 1e-10), min FD order " +
             detail::fmt(worst_order) + " (>= 1.8)";
  return r;
}

inline CriterionResult kernel_cross_validation(detail::Context& ctx) {
  CriterionResult r{.id = 2, .name = "kernel cross-validation", .budget = 10.0};
  std::mt19937_64 rng(ctx.opt.seed + 2);
  const int samples = ctx.opt.quick ? 200 : 1000;
  double worst = 0.0;
  for (int dim : {3, 5, 6}) {
    const double lower = -1.0 / (4.0 * (dim - 1));
    std::uniform_real_distribution<double> r_dist(0.0, 10.0), u(0.0, 1.0), b_dist(lower, 0.0);
    for (int i = 0; i < samples; ++i) {
      const double rr = r_dist(rng);
      const double tau = u(rng) * rr;
      const kernels::KernelParams p(dim, b_dist(rng));
      const double diff =
          std::abs(kernels::g_kernel_closed(tau, rr, p) - kernels::g_kernel_quad(tau, rr, p));
      worst = std::max(worst, diff / std::max(1.0, std::pow(rr, 4)));
    }
  }
  const double pin0 = std::abs(kernels::g_kernel_closed(1.0, 2.0, {3, 0.0}) - 1.0 / 48.0);
  const double pin1 = std::abs(kernels::g_kernel_closed(1.0, 2.0, {3, -0.125}) - 1.0 / 24.0);
  const double pin0q = std::abs(kernels::g_kernel_quad(1.0, 2.0, {3, 0.0}) - 1.0 / 48.0);
  const double pin1q = std::abs(kernels::g_kernel_quad(1.0, 2.0, {3, -0.125}) - 1.0 / 24.0);
  const double pins = std::max({pin0, pin1, pin0q, pin1q});
  r.pass = worst <= 1e-8 && pins <= 1e-10;
  r.detail = "max scaled |closed - quad| " + detail::fmt(worst) + " (<= 1e-8) over " +
             std::to_string(3 * samples) + " samples, pinned-value error " + detail::fmt(pins) +
             " (<= 1e-10)";
  return r;
}

inline CriterionResult kernel_positivity(detail::Context& ctx) {
  CriterionResult r{.id = 3, .name = "kernel positivity", .budget = 30.0};
  const int betas = ctx.opt.quick ? 10 : 20;
  const int points = ctx.opt.quick ? 25 : 50;
  double minimum = std::numeric_limits<double>::infinity();
  long evaluations = 0;
  for (int dim = 2; dim <= 6; ++dim) {
    const double lower = -1.0 / (4.0 * (dim - 1));
    for (int b = 0; b < betas; ++b) {
      const kernels::KernelParams p(dim, lower * (1.0 - static_cast<double>(b) / (betas - 1)));
      for (int i = 0; i < points; ++i) {
        const double rr = 10.0 * i / (points - 1);
        for (int j = 0; j <= i; ++j) {
          const double tau = 10.0 * j / (points - 1);
          minimum = std::min(minimum, kernels::g_kernel(tau, rr, p));
          ++evaluations;
        }
      }
    }
  }
  r.pass = minimum >= -1e-12;
  r.detail = "min G " + detail::fmt(minimum) + " (>= -1e-12) over " + std::to_string(evaluations) +
             " evaluations";
  return r;
}

inline CriterionResult picard_fixed_point(detail::Context&) {
  CriterionResult r{.id = 4, .name = "Picard fixed point", .budget = 30.0};
  bool ok = true;
  std::string detail;
  for (double beta : {0.0, -0.125}) {
    const kernels::KernelParams p(3, beta);
    const auto half = selfsimilar::solve_profile(selfsimilar::PicardConfig::for_radius(0.5, 129), p,
                                                 1.0, 1.0);
    const auto quarter = selfsimilar::solve_profile(
        selfsimilar::PicardConfig::for_radius(0.25, 129), p, 1.0, 1.0);
    const double q_half = half.defect_history[1] / half.defect_history[0];
    const double q_quarter = quarter.defect_history[1] / quarter.defect_history[0];
    const double scaling = q_half / q_quarter;
    const bool pass = half.defect <= 1e-12 && half.iterations <= 40 &&
                      std::abs(scaling - 16.0) <= 0.3 * 16.0;
    ok = ok && pass;
    detail += "beta=" + detail::fmt(beta) + ": " + std::to_string(half.iterations) +
              " iterations, defect " + detail::fmt(half.defect) + ", ratio scaling " +
              detail::fmt(scaling) + "; ";
  }
  r.pass = ok;
  r.detail = detail + "(need <= 40 iterations, <= 1e-12, 16 +- 30%)";
  return r;
}

inline CriterionResult growth_bounds(detail::Context& ctx) {
  CriterionResult r{.id = 5, .name = "profile growth bounds", .budget = 60.0};
  const double r_max = ctx.opt.quick ? 2.0 : 4.0;
  bool ok = true;
  double worst_change = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (double beta : {0.0, -0.125}) {
    const kernels::KernelParams p(3, beta);
    std::vector<double> constants;
    for (int base_nodes : {33, 65}) {
      auto profile = selfsimilar::solve_profile(
          selfsimilar::PicardConfig::for_radius(0.5, base_nodes), p, 1.0, 1.0);
      while (true) {
        const auto b = selfsimilar::check_theorem_bounds(profile);
        ok = ok && b.lower_bound_holds && std::isfinite(b.empirical_c);
        worst_margin = std::min(worst_margin, b.min_margin);
        if (profile.R() >= r_max - 1e-12) {
          constants.push_back(b.empirical_c);
          break;
        }
        profile = selfsimilar::extend_profile(profile, 2.0 * profile.R());
      }
    }
    const double change = std::abs(constants[1] - constants[0]) / constants[1];
    worst_change = std::max(worst_change, change);
  }
  r.pass = ok && worst_change <= 0.2;
  r.detail = "R up to " + detail::fmt(r_max) + ": min h - (c4 + c2 r^2) " +
             detail::fmt(worst_margin) + " (>= -1e-10), constant change under grid doubling " +
             detail::fmt(worst_change) + " (<= 0.2)";
  return r;
}

inline CriterionResult ode_residual_order(detail::Context& ctx) {
  CriterionResult r{.id = 6, .name = "ODE system residual order", .budget = 60.0};
  const std::vector<int> grids = ctx.opt.quick ? std::vector<int>{129, 257}
                                               : std::vector<int>{129, 257, 513};
  double worst = std::numeric_limits<double>::infinity();
  for (double beta : {0.0, -0.125}) {
    const kernels::KernelParams p(3, beta);
    double prev1 = 0.0, prev2 = 0.0;
    for (int nodes : grids) {
      const auto profile =
          selfsimilar::solve_profile(selfsimilar::PicardConfig::for_radius(1.0, nodes), p, 1.0, 1.0);
      const auto res = selfsimilar::ode_residual(profile);
      if (prev1 > 0.0) {
        worst = std::min({worst, detail::order(prev1, res.max_res1),
                          detail::order(prev2, res.max_res2)});
      }
      prev1 = res.max_res1;
      prev2 = res.max_res2;
    }
  }
  r.pass = worst >= 1.8;
  r.detail = "min measured order " + detail::fmt(worst) + " (>= 1.8)";
  return r;
}

inline CriterionResult elliptic_signs(detail::Context& ctx) {
  CriterionResult r{.id = 7, .name = "elliptic sign structure", .budget = 30.0};
  std::vector<elliptic::EllipticState> states = ctx.continuation_1d().states;
  elliptic::EllipticConfig cfg;
  cfg.k_schedule = elliptic::geometric_schedule(ctx.opt.quick ? 4.0 : 16.0);
  const auto square = numerics::make_grid(numerics::Grid::unit_square(16));
  for (auto& s : elliptic::continuation(square, 1.0, cfg).states) states.push_back(std::move(s));
  long violations = 0;
  for (const auto& s : states) {
    for (std::size_t n = 0; n < s.grid->size(); ++n) {
      if (s.psi[n] < 0.0 || s.v[n] > 0.0) ++violations;
      if (s.grid->is_boundary(n) && (s.psi[n] != 0.0 || s.v[n] != 0.0)) ++violations;
    }
  }
  r.pass = violations == 0;
  r.detail = std::to_string(states.size()) + " states (1-D and 2-D), " +
             std::to_string(violations) + " sign or boundary violations";
  return r;
}

inline CriterionResult energy_identity(detail::Context&) {
  CriterionResult r{.id = 8, .name = "energy identity", .budget = 60.0};
  elliptic::EllipticConfig cfg;
  cfg.k_schedule = {8.0};
  std::vector<double> rel;
  for (int cells : {32, 64, 128}) {
    const auto g = numerics::make_grid(numerics::Grid::interval(0.0, 1.0, cells));
    rel.push_back(elliptic::energy_balance(elliptic::solve_fixed_k(g, 8.0, 1.0, cfg)).relative());
  }
  const double f1 = rel[0] / rel[1];
  const double f2 = rel[1] / rel[2];
  r.pass = rel[1] <= 1e-3 && f1 >= 3.0 && f2 >= 3.0;
  r.detail = "k=8: relative defect " + detail::fmt(rel[1]) + " at h=1/64 (<= 1e-3), refinement " +
             "factors " + detail::fmt(f1) + ", " + detail::fmt(f2) + " (>= 3)";
  return r;
}

inline CriterionResult continuation_trends(detail::Context& ctx) {
  CriterionResult r{.id = 9, .name = "k-continuation trends", .budget = 120.0};
  const auto& states = ctx.continuation_1d().states;
  const auto rows = elliptic::gradient_blowup_diagnostic(states);
  std::vector<double> res;
  for (const auto& s : states) res.push_back(elliptic::interior_residual(s, 0.2));
  std::string breaks;
  for (std::size_t j = 1; j < res.size(); ++j) {
    if (res[j] > 1.05 * res[j - 1]) {
      breaks += " k=" + detail::fmt(states[j - 1].k) + "->" + detail::fmt(states[j].k) + " (" +
                detail::fmt(res[j - 1]) + " -> " + detail::fmt(res[j]) + ")";
    }
  }
  bool b_increasing = true;
  for (std::size_t j = 1; j < rows.size(); ++j) b_increasing = b_increasing && rows[j].B > rows[j - 1].B;
  r.pass = breaks.empty() && b_increasing;
  r.detail = "interior residual " + detail::fmt(res.front()) + " -> " + detail::fmt(res.back()) +
             (breaks.empty() ? std::string(", non-increasing") : ", increases at" + breaks) +
             "; B " + detail::fmt(rows.front().B) + " -> " + detail::fmt(rows.back().B) +
             (b_increasing ? " strictly increasing" : " NOT increasing");
  return r;
}

inline CriterionResult poincare_bound(detail::Context& ctx) {
  CriterionResult r{.id = 10, .name = "Poincare bound", .budget = 10.0};
  const double bound = 1.0 / std::pow(std::numbers::pi, 4) + 1e-4;
  double worst = 0.0;
  for (const auto& s : ctx.continuation_1d().states) {
    worst = std::max(worst, elliptic::poincare_ratio(s));
  }
  r.pass = worst <= bound;
  r.detail = "max ratio " + detail::fmt(worst, 6) + " (<= " + detail::fmt(bound, 6) + ")";
  return r;
}

inline CriterionResult amplitude_and_decay(detail::Context& ctx) {
  CriterionResult r{.id = 11, .name = "amplitude law and decay", .budget = 120.0};
  std::mt19937_64 rng(ctx.opt.seed + 11);
  std::uniform_real_distribution<double> a_dist(0.2, 5.0), l_dist(0.1, 10.0), t_dist(0.0, 100.0);
  double identity = 0.0;
  for (int i = 0; i < 100; ++i) {
    const evolution::AmplitudeParams p{a_dist(rng), l_dist(rng)};
    const double t = t_dist(rng);
    const double a = evolution::amplitude(t, p);
    const double lhs = evolution::amplitude_derivative(t, p) + p.lambda * std::pow(a, 5);
    identity = std::max(identity, std::abs(lhs) / (p.lambda * std::pow(a, 5)));
  }

  elliptic::EllipticConfig cfg;
  cfg.k_schedule = elliptic::geometric_schedule(256.0);
  const auto g = numerics::make_grid(numerics::Grid::interval(0.0, 1.0, 32));
  const auto state = elliptic::continuation(g, 1.0, cfg).states.back();
  const std::vector<double> times{0.0, 0.1, 1.0, 10.0, 100.0};
  const auto decay = evolution::decay_norm_check(state, times);
  const double t_end = 0.1;
  const auto traj = evolution::evolve_mol(state, t_end, 1.0);
  const double residual = elliptic::interior_residual(state, 0.2);
  const double bound = 5.0 * residual * t_end;
  r.pass = identity <= 1e-12 && decay.relative_variation <= 1e-10 && traj.max_deviation <= bound;
  r.detail = "A' identity " + detail::fmt(identity) + " (<= 1e-12), decay variation " +
             detail::fmt(decay.relative_variation) + " (<= 1e-10), MOL deviation " +
             detail::fmt(traj.max_deviation) + " (<= " + detail::fmt(bound) + ")";
  return r;
}

/// Artifacts whose bytes must not depend on anything but the seed.
inline std::string deterministic_artifacts(std::uint64_t seed) {
  const kernels::KernelParams p(3, -0.125);
  const auto profile =
      selfsimilar::solve_profile(selfsimilar::PicardConfig::for_radius(0.5, 65), p, 1.0, 1.0);
  elliptic::EllipticConfig cfg;
  cfg.k_schedule = elliptic::geometric_schedule(8.0);
  const auto g = numerics::make_grid(numerics::Grid::interval(0.0, 1.0, 32));
  const auto states = elliptic::continuation(g, 1.0, cfg).states;
  std::mt19937_64 rng(seed);
  const auto samples = detail::similarity_samples(3, p.beta(), 0.05, 0.45, 10, rng);
  std::string out = io::profile_csv(profile) + io::state_csv(states.back());
  out += io::format_double(selfsimilar::spacetime_residual(profile, samples)) + "\n";
  return out;
}

inline CriterionResult determinism(detail::Context& ctx, double elapsed_before) {
  CriterionResult r{.id = 12, .name = "end-to-end determinism", .budget = 30.0};
  const bool same = deterministic_artifacts(ctx.opt.seed) == deterministic_artifacts(ctx.opt.seed);
  const double limit = ctx.opt.quick ? 30.0 : 300.0;
  r.pass = same && elapsed_before <= limit;
  r.detail = std::string(same ? "repeated artifacts byte-identical" : "artifacts differ") +
             ", suite time " + detail::fmt(elapsed_before) + " s (<= " + detail::fmt(limit) + " s)";
  return r;
}

// ---------------------------------------------------------------------------

/// Runs the selected criteria (all when `only` is empty) in order.
inline std::vector<CriterionResult> run_suite(const Options& opt, const std::vector<int>& only = {}) {
  using clock = std::chrono::steady_clock;
  detail::Context ctx(opt);
  const std::vector<std::function<CriterionResult(detail::Context&)>> checks{
      exact_solution_oracle, kernel_cross_validation, kernel_positivity, picard_fixed_point,
      growth_bounds,         ode_residual_order,      elliptic_signs,    energy_identity,
      continuation_trends,   poincare_bound,          amplitude_and_decay};
  const auto selected = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  std::vector<CriterionResult> results;
  const auto start = clock::now();
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected(id)) continue;
    const auto t0 = clock::now();
    CriterionResult res;
    try {
      res = checks[i](ctx);
    } catch (const std::exception& e) {
      res.id = id;
      res.pass = false;
      res.detail = std::string("exception: ") + e.what();
    }
    res.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    if (res.budget > 0.0 && res.seconds > res.budget) {
      res.pass = false;
      res.detail += "; runtime over budget";
    }
    results.push_back(res);
  }
  if (selected(12)) {
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    const auto t0 = clock::now();
    auto res = determinism(ctx, elapsed);
    res.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    results.push_back(res);
  }
  return results;
}

inline std::string format_line(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] %2d %-28s", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str());
  return std::string(head) + " " + r.detail + " (" + detail::fmt(r.seconds) + " s)";
}

}  // namespace crystal::acceptance
