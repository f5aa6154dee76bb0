// Command-line front end: selfsimilar | elliptic | evolve | verify.
//
// Exit codes: 0 success, 1 invalid input, 2 non-convergence, 3 verify failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crystal/crystal.hpp"

namespace {

using crystal::io::json;
namespace fs = std::filesystem;

constexpr int kInvalidInput = 1;
constexpr int kNonConvergence = 2;
constexpr int kVerifyFailure = 3;

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  std::string config;
  bool quick = false;
};

struct SelfSimilarArgs {
  int dim = 3;
  double beta = -0.125;
  double c2 = 1.0;
  double c4 = 1.0;
  double rmax = 1.0;
  int nodes = 129;
  double tol = 1e-12;
  int max_iter = 500;
  double damping = 0.0;  // 0 selects the radius-dependent default
  int samples = 20;
};

struct EllipticArgs {
  int dim = 1;
  double lambda = 1.0;
  double kmax = 1024.0;
  int cells = 64;
  double tol = 1e-12;
  int max_iter = 2000;
  double damping = 0.3;
  int homotopy = 0;
  double margin = 0.2;
};

struct EvolveArgs {
  int dim = 1;
  double lambda = 1.0;
  double kmax = 256.0;
  int cells = 32;
  double A0 = 1.0;
  double t_end = 0.1;
  double dt = 1.0;
  int samples = 10;
  double safety = 0.5;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--seed", c.seed, "Seed for randomized samples");
  cmd->add_option("--config", c.config, "JSON file of flag values (flags override it)");
  cmd->add_flag("--quick", c.quick, "Reduced workload");
}

/// Expands `--config FILE` into flag tokens placed directly after the
/// subcommand, so flags given on the command line come later and win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  json cfg;
  try {
    cfg = json::parse(crystal::io::read_text(path));
  } catch (const json::parse_error& e) {
    throw crystal::InvalidInput("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw crystal::InvalidInput("config " + path + ": expected a JSON object");
  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
    } else if (value.is_string()) {
      injected.push_back("--" + key);
      injected.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      injected.push_back("--" + key);
      injected.push_back(value.dump());
    } else {
      throw crystal::InvalidInput("config " + path + ": value of '" + key +
                                  "' must be a number, string or boolean");
    }
  }
  std::size_t at = 1;
  while (at < args.size() && args[at].rfind("-", 0) == 0) ++at;
  if (at < args.size()) ++at;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return args;
}

void write_report(const Common& c, const crystal::io::RunReport& report) {
  crystal::io::write_text(fs::path(c.out) / "report.json", report.to_json().dump(2) + "\n");
}

int run_selfsimilar(const SelfSimilarArgs& a, const Common& c) {
  using namespace crystal::selfsimilar;
  const auto t0 = std::chrono::steady_clock::now();
  const crystal::kernels::KernelParams params(a.dim, a.beta);
  params.require_positivity_range();
  auto cfg = PicardConfig::for_radius(a.rmax, a.nodes, a.tol);
  cfg.max_iter = a.max_iter;
  if (a.damping > 0.0) cfg.damping = a.damping;
  const auto profile = solve_profile(cfg, params, a.c2, a.c4);

  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> y_dist(0.1 * a.rmax, 0.9 * a.rmax), t_dist(0.5, 2.0);
  std::normal_distribution<double> dir(0.0, 1.0);
  std::vector<SpacetimeSample> samples;
  for (int i = 0; i < a.samples; ++i) {
    const double t = t_dist(rng);
    const double radius = y_dist(rng) * std::pow(t, a.beta);
    std::vector<double> x(static_cast<std::size_t>(a.dim));
    double norm = 0.0;
    for (auto& v : x) {
      v = dir(rng);
      norm += v * v;
    }
    for (auto& v : x) v *= radius / std::sqrt(norm);
    samples.push_back({std::move(x), t});
  }
  const auto ode = ode_residual(profile);
  const auto bounds = check_theorem_bounds(profile);

  crystal::io::write_text(fs::path(c.out) / "profile.csv", crystal::io::profile_csv(profile));
  crystal::io::RunReport report;
  report.command = "selfsimilar";
  report.inputs = {{"dim", a.dim},   {"beta", a.beta},   {"c2", a.c2},
                   {"c4", a.c4},     {"rmax", a.rmax},   {"nodes", a.nodes},
                   {"tol", a.tol},   {"max_iter", a.max_iter}, {"damping", cfg.damping},
                   {"samples", a.samples}, {"seed", c.seed}};
  report.iterations = {{"picard", profile.iterations}};
  report.defects = {{"fixed_point", profile.defect},
                    {"history", crystal::io::to_json(profile.defect_history)}};
  report.residuals = {{"ode_res1", ode.max_res1},
                      {"ode_res2", ode.max_res2},
                      {"spacetime", samples.empty() ? 0.0 : spacetime_residual(profile, samples)},
                      {"weak_form", weak_form_defect(profile)},
                      {"lower_bound_holds", bounds.lower_bound_holds},
                      {"empirical_c", bounds.empirical_c}};
  report.wall_time = seconds_since(t0);
  write_report(c, report);
  std::printf("selfsimilar: %d iterations, defect %.3g, ode residuals %.3g / %.3g\n",
              profile.iterations, profile.defect, ode.max_res1, ode.max_res2);
  return 0;
}

crystal::numerics::GridPtr make_domain(int dim, int cells) {
  if (dim == 1) return crystal::numerics::make_grid(crystal::numerics::Grid::interval(0.0, 1.0, cells));
  if (dim == 2) return crystal::numerics::make_grid(crystal::numerics::Grid::unit_square(cells));
  throw crystal::InvalidInput("--dim must be 1 or 2 for elliptic runs");
}

crystal::elliptic::EllipticConfig elliptic_config(double kmax, double tol, int max_iter,
                                                  double damping, int homotopy) {
  crystal::elliptic::EllipticConfig cfg;
  cfg.k_schedule = crystal::elliptic::geometric_schedule(kmax);
  cfg.inner_tol = tol;
  cfg.inner_max_iter = max_iter;
  cfg.damping = damping;
  cfg.homotopy_steps = homotopy;
  return cfg;
}

int run_elliptic(const EllipticArgs& a, const Common& c) {
  using namespace crystal::elliptic;
  const auto t0 = std::chrono::steady_clock::now();
  if (!(a.lambda > 0.0)) throw crystal::DomainError("--lambda must be positive");
  const auto grid = make_domain(a.dim, a.cells);
  const auto cfg = elliptic_config(a.kmax, a.tol, a.max_iter, a.damping, a.homotopy);
  const auto result = continuation(grid, a.lambda, cfg);

  json per_k = json::array();
  json iterations = json::object();
  for (const auto& s : result.states) {
    char name[64];
    std::snprintf(name, sizeof name, "state_k%g.csv", s.k);
    crystal::io::write_text(fs::path(c.out) / name, crystal::io::state_csv(s));
    per_k.push_back(crystal::io::state_diagnostics(s, a.margin));
    iterations[crystal::io::format_double(s.k)] = s.iterations;
  }
  json diagnostics;
  diagnostics["states"] = per_k;
  diagnostics["distances"] = crystal::io::to_json(result.distances);
  crystal::io::write_text(fs::path(c.out) / "diagnostics.json", diagnostics.dump(2) + "\n");

  crystal::io::RunReport report;
  report.command = "elliptic";
  report.inputs = {{"dim", a.dim},         {"lambda", a.lambda}, {"kmax", a.kmax},
                   {"cells", a.cells},     {"tol", a.tol},       {"max_iter", a.max_iter},
                   {"damping", a.damping}, {"homotopy", a.homotopy}, {"margin", a.margin}};
  report.iterations = iterations;
  report.defects = {{"fixed_point", result.states.back().defect},
                    {"energy_relative", per_k.back()["energy_relative"]}};
  report.residuals = {{"interior_residual", per_k.back()["interior_residual"]}};
  report.wall_time = seconds_since(t0);
  write_report(c, report);
  std::printf("elliptic: %zu stages, final interior residual %.3g\n", result.states.size(),
              per_k.back()["interior_residual"].get<double>());
  return 0;
}

int run_evolve(const EvolveArgs& a, const Common& c) {
  using namespace crystal;
  const auto t0 = std::chrono::steady_clock::now();
  if (!(a.lambda > 0.0)) throw DomainError("--lambda must be positive");
  const auto grid = make_domain(a.dim, a.cells);
  const auto cfg = elliptic_config(a.kmax, 1e-12, 2000, 0.3, 0);
  const auto state = elliptic::continuation(grid, a.lambda, cfg).states.back();
  evolution::MolOptions opt;
  opt.A0 = a.A0;
  opt.samples = a.samples;
  opt.safety = a.safety;
  const auto traj = evolution::evolve_mol(state, a.t_end, a.dt, opt);
  const double residual = elliptic::interior_residual(state, 0.2);
  const std::vector<double> times{0.1 * a.t_end, a.t_end};
  const auto decay = evolution::decay_norm_check(state, traj.times, a.A0);

  io::write_text(fs::path(c.out) / "trajectory.csv", io::trajectory_csv(traj, state, a.A0, a.t_end));
  io::RunReport report;
  report.command = "evolve";
  report.inputs = {{"dim", a.dim},       {"lambda", a.lambda}, {"kmax", a.kmax},
                   {"cells", a.cells},   {"A0", a.A0},         {"t_end", a.t_end},
                   {"dt", a.dt},         {"samples", a.samples}, {"safety", a.safety}};
  report.iterations = {{"steps", traj.steps}, {"rejected", traj.rejected},
                       {"elliptic", state.iterations}};
  report.defects = {{"max_deviation", traj.max_deviation},
                    {"deviation_bound", 5.0 * residual * a.t_end},
                    {"decay_variation", decay.relative_variation}};
  report.residuals = {{"interior_residual", residual},
                      {"separation_residual", evolution::separation_residual(state, times, a.A0)}};
  report.wall_time = seconds_since(t0);
  write_report(c, report);
  std::printf("evolve: %ld steps, max deviation %.3g (bound %.3g)\n", traj.steps,
              traj.max_deviation, 5.0 * residual * a.t_end);
  return 0;
}

int run_verify(const Common& c, bool out_given) {
  crystal::acceptance::Options opt;
  opt.quick = c.quick;
  opt.seed = c.seed;
  const auto results = crystal::acceptance::run_suite(opt);
  json table = json::array();
  std::string failed;
  for (const auto& r : results) {
    std::cout << crystal::acceptance::format_line(r) << "\n";
    table.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail},
                     {"seconds", r.seconds}});
    if (!r.pass) failed += (failed.empty() ? "" : ", ") + std::to_string(r.id) + " (" + r.name + ")";
  }
  if (out_given) {
    crystal::io::write_text(fs::path(c.out) / "verify.json", table.dump(2) + "\n");
  }
  if (!failed.empty()) {
    std::cout << "verify: failing criteria: " << failed << "\n";
    return kVerifyFailure;
  }
  std::cout << "verify: all criteria pass\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solvers and checks for the crystal-surface equation d_t rho + rho^2 Lap^2 rho^3 = 0", "crystal"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  SelfSimilarArgs ss;
  EllipticArgs el;
  EvolveArgs ev;

  auto* cmd_ss = app.add_subcommand("selfsimilar", "Radial self-similar profile by Picard iteration");
  cmd_ss->add_option("--dim", ss.dim, "Space dimension N >= 2");
  cmd_ss->add_option("--beta", ss.beta, "Similarity exponent in [-1/(4(N-1)), 0]");
  cmd_ss->add_option("--c2", ss.c2, "Coefficient of r^2 (> 0)");
  cmd_ss->add_option("--c4", ss.c4, "Value h(0) (> 0)");
  cmd_ss->add_option("--rmax", ss.rmax, "Right end R of the radial interval");
  cmd_ss->add_option("--nodes", ss.nodes, "Radial nodes (odd, >= 33)");
  cmd_ss->add_option("--tol", ss.tol, "Fixed-point tolerance");
  cmd_ss->add_option("--max-iter", ss.max_iter, "Iteration limit");
  cmd_ss->add_option("--damping", ss.damping, "Damping in (0, 1]; 0 picks 1 for R <= 1, else 0.5");
  cmd_ss->add_option("--samples", ss.samples, "Random space-time residual samples");
  add_common(cmd_ss, common);

  auto* cmd_el = app.add_subcommand("elliptic", "Regularized elliptic solve with k-continuation");
  cmd_el->add_option("--dim", el.dim, "1 (unit interval) or 2 (unit square)");
  cmd_el->add_option("--lambda", el.lambda, "Eigenvalue lambda > 0");
  cmd_el->add_option("--kmax", el.kmax, "Last k of the schedule 1, 2, 4, ...");
  cmd_el->add_option("--cells", el.cells, "Cells per side");
  cmd_el->add_option("--tol", el.tol, "Inner fixed-point tolerance");
  cmd_el->add_option("--max-iter", el.max_iter, "Inner iteration limit");
  cmd_el->add_option("--damping", el.damping, "Damping in (0, 1]");
  cmd_el->add_option("--homotopy", el.homotopy, "Steps of the sigma homotopy (0 disables it)");
  cmd_el->add_option("--margin", el.margin, "Boundary strip excluded from the interior residual");
  add_common(cmd_el, common);

  auto* cmd_ev = app.add_subcommand("evolve", "Method-of-lines check of the separable solution");
  cmd_ev->add_option("--dim", ev.dim, "1 or 2");
  cmd_ev->add_option("--lambda", ev.lambda, "Eigenvalue lambda > 0");
  cmd_ev->add_option("--kmax", ev.kmax, "Regularization level of the initial profile");
  cmd_ev->add_option("--cells", ev.cells, "Cells per side");
  cmd_ev->add_option("--A0", ev.A0, "Initial amplitude A(0)");
  cmd_ev->add_option("--t-end", ev.t_end, "Final time");
  cmd_ev->add_option("--dt", ev.dt, "Largest time step");
  cmd_ev->add_option("--samples", ev.samples, "Trajectory snapshots");
  cmd_ev->add_option("--safety", ev.safety, "Fraction of the explicit stability limit");
  add_common(cmd_ev, common);

  auto* cmd_verify = app.add_subcommand("verify", "Run the acceptance suite");
  add_common(cmd_verify, common);

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(std::move(args));
  } catch (const crystal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (app.get_subcommands().empty()) std::cerr << "\n" << app.help();
    return kInvalidInput;
  }

  try {
    if (*cmd_ss) return run_selfsimilar(ss, common);
    if (*cmd_el) return run_elliptic(el, common);
    if (*cmd_ev) return run_evolve(ev, common);
    if (*cmd_verify) return run_verify(common, cmd_verify->count("--out") > 0);
  } catch (const crystal::NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const crystal::StepUnderflow& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const crystal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  }
  std::cerr << app.help();
  return kInvalidInput;
}
