#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "crystal/numerics.hpp"

namespace {

using namespace crystal::numerics;

std::vector<double> samples_of(double (*fn)(double), double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  const double h = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) v[i] = fn(lo + static_cast<double>(i) * h);
  return v;
}

TEST(QuadSimpson, ConstantIntegrand) {
  const auto v = samples_of([](double) { return 1.0; }, 0.0, 1.0, 5);
  EXPECT_DOUBLE_EQ(quad_simpson(v, 0.25), 1.0);
}

TEST(QuadSimpson, ExactForCubics) {
  const auto v = samples_of([](double x) { return x * x * x; }, 0.0, 1.0, 5);
  EXPECT_NEAR(quad_simpson(v, 0.25), 0.25, 1e-15);
}

TEST(QuadSimpson, ArctanIntegral) {
  const auto v = samples_of([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0, 101);
  EXPECT_NEAR(quad_simpson(v, 0.01), std::numbers::pi / 4.0, 1e-9);
}

TEST(QuadSimpson, FourthOrderOnExponential) {
  const double exact = std::exp(1.0) - 1.0;
  std::vector<double> errors;
  for (std::size_t cells : {8, 16, 32, 64}) {
    const auto v = samples_of([](double x) { return std::exp(x); }, 0.0, 1.0, cells + 1);
    errors.push_back(std::abs(quad_simpson(v, 1.0 / static_cast<double>(cells)) - exact));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    EXPECT_NEAR(std::log2(errors[i - 1] / errors[i]), 4.0, 0.1);
  }
}

TEST(QuadSimpson, EvenCountFallsBackToTrapezoidTail) {
  const auto v = samples_of([](double x) { return x * x; }, 0.0, 1.0, 4);
  const double h = 1.0 / 3.0;
  const double simpson_head = h / 3.0 * (v[0] + 4.0 * v[1] + v[2]);
  const double trapezoid_tail = 0.5 * h * (v[2] + v[3]);
  EXPECT_NEAR(quad_simpson(v, h), simpson_head + trapezoid_tail, 1e-15);
  EXPECT_NEAR(quad_simpson(v, h, EndRule::simpson38), 1.0 / 3.0, 1e-15);
}

TEST(QuadSimpson, RejectsShortInput) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(quad_simpson(one, 0.1), crystal::InvalidInput);
  const std::vector<double> two{1.0, 1.0};
  EXPECT_THROW(quad_simpson(two, 0.0), crystal::InvalidInput);
  EXPECT_DOUBLE_EQ(quad_simpson(two, 0.5), 0.5);
}

TEST(Grid, IndexSetsArePartition) {
  const auto g = Grid::unit_square(6);
  EXPECT_EQ(g.size(), 49u);
  EXPECT_EQ(g.interior().size(), 25u);
  EXPECT_EQ(g.boundary().size(), 24u);
  for (std::size_t n : g.interior()) {
    EXPECT_FALSE(g.is_boundary(n));
    EXPECT_GE(g.boundary_distance(n), 1);
  }
  for (std::size_t n : g.boundary()) EXPECT_TRUE(g.is_boundary(n));
  EXPECT_EQ(g.index(3, 2), 2u * 7u + 3u);
  EXPECT_DOUBLE_EQ(g.x(g.index(3, 2)), 0.5);
  EXPECT_THROW(Grid::interval(0.0, 1.0, 1), crystal::InvalidInput);
}

TEST(Field, RequiresOneValuePerNode) {
  const auto g = make_grid(Grid::interval(0.0, 1.0, 4));
  EXPECT_THROW(Field(g, std::vector<double>(3, 0.0)), crystal::InvalidInput);
  auto f = Field::sample(g, [](double x) { return x; });
  EXPECT_TRUE(f.finite());
  f[2] = std::nan("");
  EXPECT_FALSE(f.finite());
}

TEST(SolveBanded, Identity) {
  BandedMatrix a(3, 0, 0);
  for (std::size_t i = 0; i < 3; ++i) a.set(i, i, 1.0);
  const std::vector<double> rhs{1.0, 2.0, 3.0};
  const auto x = solve_banded(a, rhs);
  EXPECT_EQ(x, rhs);
}

TEST(SolveBanded, DirichletLaplacianMatchesDenseSolve) {
  // tridiag(-1, 2, -1)/h^2 x = 1 with h = 1/4 has x = h^2 (3/2, 2, 3/2).
  const double h = 0.25;
  BandedMatrix a(3, 1, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    a.set(i, i, 2.0 / (h * h));
    if (i > 0) a.set(i, i - 1, -1.0 / (h * h));
    if (i < 2) a.set(i, i + 1, -1.0 / (h * h));
  }
  const auto x = solve_banded(a, std::vector<double>{1.0, 1.0, 1.0});
  EXPECT_NEAR(x[0], 1.5 * h * h, 1e-15);
  EXPECT_NEAR(x[1], 2.0 * h * h, 1e-15);
  EXPECT_NEAR(x[2], 1.5 * h * h, 1e-15);
}

TEST(SolveBanded, ZeroRhsGivesZero) {
  BandedMatrix a(4, 1, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    a.set(i, i, 3.0);
    if (i > 0) a.set(i, i - 1, 1.0);
    if (i < 3) a.set(i, i + 1, -1.0);
  }
  for (double v : solve_banded(a, std::vector<double>(4, 0.0))) EXPECT_EQ(v, 0.0);
}

TEST(SolveBanded, SingularAndNonSquareThrow) {
  BandedMatrix singular(3, 1, 1);
  singular.set(0, 0, 1.0);
  singular.set(1, 1, 1.0);
  EXPECT_THROW(solve_banded(singular, std::vector<double>(3, 1.0)), crystal::FactorizationError);
  BandedMatrix rect(3, 4, 1, 1);
  EXPECT_THROW(solve_banded(rect, std::vector<double>(3, 1.0)), crystal::FactorizationError);
}

TEST(SolveBanded, RandomSystemsRoundTrip) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {5, 50, 400, 1000}) {
    for (auto [kl, ku] : {std::pair<std::size_t, std::size_t>{1, 1}, {3, 2}, {0, 4}, {7, 7}}) {
      BandedMatrix a(n, kl, ku);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= kl ? i - kl : 0;
        const std::size_t hi = std::min(n - 1, i + ku);
        for (std::size_t j = lo; j <= hi; ++j) a.set(i, j, u(rng));
        // Random signs with a modest diagonal keep pivoting exercised.
        a.add(i, i, 0.5 * static_cast<double>(kl + ku + 1) * (u(rng) > 0 ? 1.0 : -1.0));
      }
      std::vector<double> rhs(n);
      for (auto& v : rhs) v = u(rng);
      const auto x = solve_banded(a, rhs);
      const auto ax = a.apply(x);
      const double scale = a.norm_inf() * max_abs(x) + max_abs(rhs);
      EXPECT_LE(max_abs_diff(ax, rhs), 1e-10 * scale) << "n=" << n << " kl=" << kl << " ku=" << ku;
    }
  }
}

TEST(Laplacian, QuadraticIsExact) {
  const auto g = make_grid(Grid::interval(0.0, 1.0, 10));
  const auto lap = laplacian_apply(Field::sample(g, [](double x) { return x * x; }));
  for (std::size_t n : g->interior()) EXPECT_NEAR(lap[n], 2.0, 1e-11);
  for (std::size_t n : g->boundary()) EXPECT_EQ(lap[n], 0.0);
}

TEST(Laplacian, RadialQuadratic) {
  const auto g = make_grid(Grid::interval(0.0, 1.0, 16));
  const auto lap = laplacian_apply(Field::sample(g, [](double r) { return r * r; }),
                                   LaplacianMode::radial, 3);
  for (std::size_t i = 0; i + 1 < g->size(); ++i) EXPECT_NEAR(lap[i], 6.0, 1e-10) << i;
}

TEST(Laplacian, SineAgainstAnalytic) {
  const auto g = make_grid(Grid::interval(0.0, 1.0, 100));
  const double pi = std::numbers::pi;
  const auto lap = laplacian_apply(Field::sample(g, [&](double x) { return std::sin(pi * x); }));
  for (std::size_t n : g->interior()) {
    EXPECT_NEAR(lap[n], -pi * pi * std::sin(pi * g->x(n)), 1e-2);
  }
}

TEST(Laplacian, AffineFieldsVanish) {
  const auto line = make_grid(Grid::interval(-1.0, 2.0, 30));
  const auto a1 = laplacian_apply(Field::sample(line, [](double x) { return 3.0 - 7.5 * x; }));
  for (std::size_t n : line->interior()) EXPECT_NEAR(a1[n], 0.0, 1e-10);
  const auto square = make_grid(Grid::unit_square(20));
  const auto a2 = laplacian_apply(
      Field::sample(square, [](double x, double y) { return 1.0 + 2.0 * x - 4.0 * y; }));
  for (std::size_t n : square->interior()) EXPECT_NEAR(a2[n], 0.0, 1e-10);
}

TEST(Laplacian, FivePointQuadratic) {
  const auto g = make_grid(Grid::unit_square(8));
  const auto lap =
      laplacian_apply(Field::sample(g, [](double x, double y) { return x * x + 3.0 * y * y; }));
  for (std::size_t n : g->interior()) EXPECT_NEAR(lap[n], 8.0, 1e-11);
}

TEST(Laplacian, RadialModeOnSquareIsModeError) {
  const auto g = make_grid(Grid::unit_square(4));
  EXPECT_THROW(laplacian_apply(Field::zeros(g), LaplacianMode::radial, 2), crystal::ModeError);
}

TEST(Gradient, SecondOrderIncludingBoundary) {
  const auto g = make_grid(Grid::interval(0.0, 1.0, 10));
  const auto f = Field::sample(g, [](double x) { return x * x; });
  const auto grad = gradient(*g, f.values);
  for (std::size_t n = 0; n < g->size(); ++n) EXPECT_NEAR(grad[0][n], 2.0 * g->x(n), 1e-12);
}

TEST(CubicInterpolate, ExactForCubics) {
  const double h = 0.1;
  std::vector<double> f(11);
  auto p = [](double x) { return 1.0 - x + 2.0 * x * x - 0.5 * x * x * x; };
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = p(static_cast<double>(i) * h);
  for (double x : {0.0, 0.03, 0.47, 0.95, 1.0}) EXPECT_NEAR(cubic_interpolate(f, h, x), p(x), 1e-13);
  EXPECT_THROW(cubic_interpolate(f, h, 1.2), crystal::DomainError);
}

TEST(Integrate, TrapezoidOnSquareIsExactForBilinear) {
  const auto g = make_grid(Grid::unit_square(10));
  const auto f = Field::sample(g, [](double x, double y) { return 1.0 + x * y; });
  EXPECT_NEAR(integrate(f), 1.25, 1e-14);
}

}  // namespace
