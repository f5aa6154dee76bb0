// Builds psi on (0, 1) by k-continuation, then follows rho = A(t) psi both in
// closed form and by direct time stepping.

#include <cstdio>
#include <vector>

#include "crystal/elliptic.hpp"
#include "crystal/evolution.hpp"

int main() {
  using namespace crystal;
  elliptic::EllipticConfig cfg;
  cfg.k_schedule = elliptic::geometric_schedule(256.0);
  const auto grid = numerics::make_grid(numerics::Grid::interval(0.0, 1.0, 32));
  const auto cont = elliptic::continuation(grid, 1.0, cfg);
  const auto rows = elliptic::gradient_blowup_diagnostic(cont.states);

  std::printf("%8s %12s %14s %12s\n", "k", "max psi", "interior res", "B(k)");
  for (std::size_t j = 0; j < cont.states.size(); ++j) {
    const auto& s = cont.states[j];
    std::printf("%8g %12.6f %14.6f %12.4f\n", s.k, numerics::max_abs(s.psi.values),
                elliptic::interior_residual(s, 0.2), rows[j].B);
  }

  const auto& state = cont.states.back();
  const auto traj = evolution::evolve_mol(state, 0.1, 1.0);
  std::printf("\n%8s %14s %14s\n", "t", "A(t)", "max |rho - A psi|");
  const evolution::AmplitudeParams amp{1.0, 1.0};
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    std::printf("%8.3f %14.8f %14.3e\n", traj.times[j], evolution::amplitude(traj.times[j], amp),
                traj.deviation[j]);
  }
  return 0;
}
