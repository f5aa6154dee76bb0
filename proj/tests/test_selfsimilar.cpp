#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "crystal/selfsimilar.hpp"

namespace {

using namespace crystal::selfsimilar;
using crystal::kernels::KernelParams;

RadialProfile envelope_profile(const KernelParams& p, double R, int nodes, double c2, double c4) {
  const auto r = uniform_radial_grid(R, nodes);
  std::vector<double> h(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) h[i] = c4 + c2 * r[i] * r[i];
  auto g = RadialProfile::from_samples(p, r[1], h);
  g.c2 = c2;
  g.c4 = c4;
  return g;
}

std::vector<SpacetimeSample> random_samples(int dim, double beta, double R, int count,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> y_dist(0.1 * R, 0.9 * R), t_dist(0.5, 2.0);
  std::normal_distribution<double> dir(0.0, 1.0);
  std::vector<SpacetimeSample> out;
  for (int s = 0; s < count; ++s) {
    const double t = t_dist(rng);
    const double radius = y_dist(rng) * std::pow(t, beta);
    std::vector<double> x(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (auto& v : x) {
      v = dir(rng);
      norm += v * v;
    }
    for (auto& v : x) v *= radius / std::sqrt(norm);
    out.push_back({x, t});
  }
  return out;
}

TEST(PicardApply, ValueAtOriginIsC4) {
  const KernelParams p(3, -0.1);
  auto g = envelope_profile(p, 0.5, 65, 2.0, 0.7);
  for (std::size_t i = 0; i < g.size(); ++i) g.h[i] += 0.3 * std::sin(7.0 * g.r[i]) + 0.3;
  const auto cfg = PicardConfig::for_radius(0.5, 65);
  const auto tg = picard_apply(g, cfg);
  EXPECT_EQ(tg.h[0], 0.7);
  for (std::size_t i = 0; i < tg.size(); ++i) EXPECT_GE(tg.h[i], tg.lower_envelope(i));
}

TEST(PicardApply, PinnedValueAtHalf) {
  // 1.25 + int_0^0.5 G(tau, 0.5) (1 + tau^2)^{-1/3} dtau for N = 3, beta = 0, from a
  // 30-digit nested quadrature of the defining integrals.
  constexpr double kPinned = 1.2501287251307282;
  const KernelParams p(3, 0.0);
  const double oracle =
      1.25 + boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                 [&](double tau) {
                   return crystal::kernels::g_kernel(tau, 0.5, p) * std::pow(1.0 + tau * tau, -1.0 / 3.0);
                 },
                 0.0, 0.5, 10, 1e-15);
  EXPECT_NEAR(oracle, kPinned, 1e-15);
  const auto tg = picard_apply(envelope_profile(p, 0.5, 129, 1.0, 1.0),
                               PicardConfig::for_radius(0.5, 129));
  EXPECT_NEAR(tg.h.back(), kPinned, 1e-10);
}

TEST(PicardApply, RejectsInadmissibleInput) {
  const KernelParams p(3, -0.1);
  auto g = envelope_profile(p, 0.5, 33, 1.0, 1.0);
  g.h[10] -= 1e-6;
  EXPECT_THROW(picard_apply(g, PicardConfig::for_radius(0.5, 33)), crystal::DomainError);
  const auto bad = envelope_profile(KernelParams(3, 0.2), 0.5, 33, 1.0, 1.0);
  EXPECT_THROW(picard_apply(bad, PicardConfig::for_radius(0.5, 33)), crystal::RangeError);
}

TEST(PicardApply, AntitoneInTheArgument) {
  const KernelParams p(4, -0.05);
  const auto base = envelope_profile(p, 0.8, 65, 1.0, 1.0);
  const PicardOperator op(p, 1.0, 1.0, base.r);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> g1 = base.h, g2 = base.h;
    for (std::size_t i = 0; i < g1.size(); ++i) {
      g1[i] += u(rng);
      g2[i] = g1[i] + u(rng);
    }
    const auto t1 = op.apply(g1);
    const auto t2 = op.apply(g2);
    for (std::size_t i = 0; i < t1.size(); ++i) ASSERT_GE(t1[i], t2[i]) << i;
  }
}

TEST(PicardApply, LipschitzConstantScalesLikeR4) {
  const KernelParams p(3, -0.125);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> constants;
  for (double R : {0.25, 0.5, 1.0}) {
    const auto base = envelope_profile(p, R, 65, 1.0, 1.0);
    const PicardOperator op(p, 1.0, 1.0, base.r);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> g1 = base.h, g2 = base.h;
      for (std::size_t i = 0; i < g1.size(); ++i) {
        g1[i] += 0.5 * u(rng);
        g2[i] += 0.5 * u(rng);
      }
      const double lip = crystal::numerics::max_abs_diff(op.apply(g1), op.apply(g2)) /
                         crystal::numerics::max_abs_diff(g1, g2);
      worst = std::max(worst, lip / std::pow(R, 4));
    }
    constants.push_back(worst);
  }
  // The Lipschitz constant of g -> g^{-1/3} on W is 1/3 c4^{-4/3}, so c <= 1/3 int G / r^4.
  for (double c : constants) {
    EXPECT_GT(c, 0.0);
    EXPECT_LT(c, 0.01);
  }
  EXPECT_LT(*std::max_element(constants.begin(), constants.end()) /
                *std::min_element(constants.begin(), constants.end()),
            3.0);
}

TEST(PicardApply, DerivativeBound) {
  // |(T g)'| <= 2 c2 R + c R^3 with c fitted at one radius and reused.
  const KernelParams p(3, -0.05);
  const double c2 = 1.5;
  auto excess = [&](double R) {
    const auto g = solve_profile(PicardConfig::for_radius(R, 129), p, c2, 1.0);
    const auto d = picard_derivative(g);
    return (crystal::numerics::max_abs(d) - 2.0 * c2 * R) / std::pow(R, 3);
  };
  const double fitted = excess(1.0);
  EXPECT_GT(fitted, 0.0);
  for (double R : {0.25, 0.5, 2.0}) EXPECT_LE(excess(R), 1.5 * fitted) << "R=" << R;
}

TEST(PicardApply, DerivativeMatchesDifferences) {
  const auto g = solve_profile(PicardConfig::for_radius(1.0, 257), KernelParams(5, -0.03), 1.0, 2.0);
  const auto d = picard_derivative(g);
  const double h = g.spacing();
  for (std::size_t i = 1; i + 1 < g.size(); ++i) {
    EXPECT_NEAR(d[i], (g.h[i + 1] - g.h[i - 1]) / (2.0 * h), 1e-5) << i;
  }
  EXPECT_EQ(d[0], 0.0);
}

TEST(SolveProfile, ConvergesQuicklyAtSmallRadius) {
  const auto cfg = PicardConfig::for_radius(0.5, 129, 1e-12);
  const auto prof = solve_profile(cfg, KernelParams(3, -0.125), 1.0, 1.0);
  EXPECT_LE(prof.defect, 1e-12);
  EXPECT_LE(prof.iterations, 40);
  EXPECT_EQ(prof.iterations, 3);
  EXPECT_EQ(prof.h[0], 1.0);
  const auto bounds = check_theorem_bounds(prof);
  EXPECT_TRUE(bounds.lower_bound_holds);
  // The returned profile is a fixed point to tol.
  const auto again = picard_apply(prof, cfg);
  EXPECT_LE(crystal::numerics::max_abs_diff(again.h, prof.h), 1e-12);
}

TEST(SolveProfile, DefectRatiosScaleLikeR4) {
  const KernelParams p(3, -0.125);
  std::vector<double> c;
  for (double R : {0.25, 0.5}) {
    auto cfg = PicardConfig::for_radius(R, 65, 1e-15);
    const auto prof = solve_profile(cfg, p, 1.0, 1.0);
    const auto ratios = contraction_ratios(prof.defect_history);
    ASSERT_FALSE(ratios.empty());
    c.push_back(ratios.front() / std::pow(R, 4));
  }
  EXPECT_NEAR(c[0] / c[1], 1.0, 0.2);
}

TEST(SolveProfile, RejectsBadInputs) {
  const auto cfg = PicardConfig::for_radius(0.5, 65);
  EXPECT_THROW(solve_profile(cfg, KernelParams(3, 0.1), 1.0, 1.0), crystal::RangeError);
  EXPECT_THROW(solve_profile(cfg, KernelParams(3, -0.3), 1.0, 1.0), crystal::RangeError);
  EXPECT_THROW(solve_profile(cfg, KernelParams(3, 0.0), 1.0, 0.0), crystal::DomainError);
  EXPECT_THROW(solve_profile(cfg, KernelParams(3, 0.0), 0.0, 1.0), crystal::DomainError);
  EXPECT_THROW(solve_profile(PicardConfig::for_radius(0.5, 64), KernelParams(3, 0.0), 1.0, 1.0),
               crystal::InvalidInput);
  EXPECT_THROW(solve_profile(PicardConfig::for_radius(0.5, 31), KernelParams(3, 0.0), 1.0, 1.0),
               crystal::InvalidInput);
}

TEST(SolveProfile, NonConvergenceCarriesHistory) {
  auto cfg = PicardConfig::for_radius(0.5, 33);
  cfg.max_iter = 2;
  try {
    solve_profile(cfg, KernelParams(3, 0.0), 1.0, 1.0);
    FAIL() << "expected NonConvergence";
  } catch (const crystal::NonConvergence& e) {
    EXPECT_EQ(e.history().size(), 2u);
    EXPECT_GT(e.history().back(), 0.0);
  }
}

TEST(ExtendProfile, SameRadiusIsIdentity) {
  const auto prof = solve_profile(PicardConfig::for_radius(0.5, 65), KernelParams(3, 0.0), 1.0, 1.0);
  const auto same = extend_profile(prof, prof.R());
  ASSERT_EQ(same.size(), prof.size());
  EXPECT_LE(crystal::numerics::max_abs_diff(same.h, prof.h), prof.config.tol);
}

TEST(ExtendProfile, RestrictionAgrees) {
  const auto small = solve_profile(PicardConfig::for_radius(0.5, 65), KernelParams(3, 0.0), 1.0, 1.0);
  const auto big = extend_profile(small, 1.0);
  ASSERT_EQ(big.size(), 129u);
  EXPECT_DOUBLE_EQ(big.spacing(), small.spacing());
  double worst = 0.0;
  for (std::size_t i = 0; i < small.size(); ++i) worst = std::max(worst, std::abs(big.h[i] - small.h[i]));
  EXPECT_LE(worst, 1e-10);
  EXPECT_THROW(extend_profile(small, 0.25), crystal::DomainError);
  EXPECT_THROW(extend_profile(small, 0.77), crystal::InvalidInput);
}

TEST(ExtendProfile, StagedDoublingStaysMonotoneAndBounded) {
  auto prof = solve_profile(PicardConfig::for_radius(0.5, 33), KernelParams(3, -0.125), 1.0, 1.0);
  for (double R : {1.0, 2.0, 4.0}) {
    prof = extend_profile(prof, R);
    EXPECT_NEAR(prof.R(), R, 1e-12);
    EXPECT_LE(prof.defect, prof.config.tol);
    for (std::size_t i = 1; i < prof.size(); ++i) ASSERT_GT(prof.h[i], prof.h[i - 1]) << "R=" << R;
    const auto b = check_theorem_bounds(prof);
    EXPECT_TRUE(b.lower_bound_holds) << "R=" << R;
    EXPECT_TRUE(std::isfinite(b.empirical_c));
  }
}

TEST(ExactLinearCoefficient, Values) {
  EXPECT_NEAR(exact_linear_coefficient(2), 0.4082483, 1e-7);
  EXPECT_NEAR(exact_linear_coefficient(3), 0.3194716, 1e-7);
  for (int n = 2; n <= 8; ++n) {
    const double c = exact_linear_coefficient(n);
    EXPECT_NEAR(std::pow(c, 4) * 12.0 * (n - 1) * (n + 1), 1.0, 1e-14);
  }
  EXPECT_THROW(exact_linear_coefficient(1), crystal::DomainError);
}

TEST(OdeResidual, ExactSolutionWithAnalyticV) {
  const int n = 3;
  const double c = exact_linear_coefficient(n);
  const double h = 1e-3;
  std::vector<double> values(1001);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::pow(c * h * static_cast<double>(i), 3);
  auto prof = RadialProfile::from_samples(KernelParams(n, 0.0), h, values);
  for (std::size_t i = 0; i < prof.size(); ++i) prof.v[i] = 3.0 * (n + 1) * c * c * c * prof.r[i];
  EXPECT_LE(ode_residual(prof).max_res2, 1e-6);
}

TEST(OdeResidual, ConstantProfileIsFlagged) {
  const double beta = -0.125;
  auto prof = RadialProfile::from_samples(KernelParams(3, beta), 0.01, std::vector<double>(65, 1.0));
  const auto res = ode_residual(prof);
  for (double v : prof.v) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(res.max_res1, 0.0);
  EXPECT_NEAR(res.max_res2, std::abs((4.0 * beta - 1.0) / 4.0), 1e-14);
}

TEST(OdeResidual, SecondOrderAtFixedPoint) {
  const KernelParams p(3, -0.125);
  std::vector<OdeResidual> res;
  for (int nodes : {129, 257, 513}) {
    res.push_back(ode_residual(solve_profile(PicardConfig::for_radius(1.0, nodes), p, 1.0, 1.0)));
  }
  for (std::size_t i = 1; i < res.size(); ++i) {
    EXPECT_GE(std::log2(res[i - 1].max_res1 / res[i].max_res1), 1.8);
    EXPECT_GE(std::log2(res[i - 1].max_res2 / res[i].max_res2), 1.8);
  }
  EXPECT_THROW(ode_residual(RadialProfile{.r = {0, 1, 2}, .h = {1, 1, 1}, .v = {0, 0, 0},
                                          .params = p}),
               crystal::InvalidInput);
}

TEST(SpacetimeResidual, ExactSolutionAnalytic) {
  for (int n : {2, 3, 5}) {
    const KernelParams p(n, -1.0 / (8.0 * (n - 1)));
    const LinearExactSolution sol{n, exact_linear_coefficient(n)};
    const auto samples = random_samples(n, p.beta(), 1.0, 20, 5);
    EXPECT_LE(spacetime_residual(sol, p, samples), 1e-6) << "N=" << n;
  }
}

TEST(SpacetimeResidual, ConvergedProfileAtFineSpacing) {
  const KernelParams p(3, -0.125);
  const auto prof = solve_profile(PicardConfig::for_radius(1.0, 1001), p, 1.0, 1.0);
  EXPECT_LE(spacetime_residual(prof, random_samples(3, p.beta(), 1.0, 20, 9)), 1e-3);
}

TEST(SpacetimeResidual, BetaZeroReducesToStationaryEquation) {
  const KernelParams p(3, 0.0);
  const auto prof = solve_profile(PicardConfig::for_radius(1.0, 257), p, 1.0, 1.0);
  std::vector<double> radii;
  for (double y : {0.15, 0.3, 0.5, 0.7, 0.85}) {
    radii.push_back(y);
    std::vector<SpacetimeSample> one{{{y, 0.0, 0.0}, 1.3}};
    const double st = spacetime_residual(prof, one);
    const std::vector<double> r{y};
    EXPECT_NEAR(st, stationary_residual(prof, r), 1e-8) << "y=" << y;
  }
  EXPECT_LE(stationary_residual(prof, radii), 1e-2);
}

TEST(SpacetimeResidual, OutOfRangeSampleThrows) {
  const KernelParams p(3, 0.0);
  const auto prof = solve_profile(PicardConfig::for_radius(0.5, 65), p, 1.0, 1.0);
  std::vector<SpacetimeSample> far{{{2.0, 0.0, 0.0}, 1.0}};
  EXPECT_THROW(spacetime_residual(prof, far), crystal::DomainError);
}

TEST(GrowthBounds, GrowthConstantStableUnderRefinement) {
  const KernelParams p(3, 0.0);
  const auto coarse = check_theorem_bounds(solve_profile(PicardConfig::for_radius(2.0, 257), p, 1.0, 1.0));
  const auto fine = check_theorem_bounds(solve_profile(PicardConfig::for_radius(2.0, 513), p, 1.0, 1.0));
  EXPECT_TRUE(coarse.lower_bound_holds);
  EXPECT_TRUE(fine.lower_bound_holds);
  EXPECT_GT(fine.empirical_c, 0.0);
  EXPECT_NEAR(coarse.empirical_c / fine.empirical_c, 1.0, 0.2);
  // Near the origin the excess is O(r^4), so the ratio stays bounded there.
  for (std::size_t i = 1; i < 10; ++i) {
    EXPECT_TRUE(std::isfinite(fine.ratios[i]));
    EXPECT_LE(fine.ratios[i], fine.empirical_c);
  }
}

TEST(WeakForm, DefectVanishesUnderRefinement) {
  const KernelParams p(3, -0.125);
  std::vector<double> d;
  for (int nodes : {129, 257, 513}) {
    d.push_back(weak_form_defect(solve_profile(PicardConfig::for_radius(1.0, nodes), p, 1.0, 1.0)));
  }
  EXPECT_GE(d[0] / d[1], 3.5);
  EXPECT_GE(d[1] / d[2], 3.5);
  EXPECT_LE(d[2], 1e-4);
}

}  // namespace
