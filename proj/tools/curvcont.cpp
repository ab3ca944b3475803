// curvcont: verify invariant suites, continue branches in the curvature,
// simulate scenarios.
//
// exit codes: 0 ok, 1 numerical failure, 2 bad input

#include <filesystem>
#include <future>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>

#include "curvcont/curvcont.hpp"

namespace fs = std::filesystem;
using namespace curvcont;

namespace
{

struct Options
{
  std::string suite = "all";
  std::string scenario;
  std::string kind = "re";
  int sigma = 0; // 0: both
  double eps_max = -1, eps_step = -1;
  std::string out;
  std::uint64_t seed = 1;
  double step = -1, tol = -1, t_final = -1;
};

std::string sigma_tag(int s) { return s > 0 ? "sigma+1" : "sigma-1"; }

RunManifest manifest_for(const std::string& cmd, const Options& o, const ScenarioSpec* spec)
{
  RunManifest m;
  m.command = cmd;
  m.scenario = o.scenario;
  m.seed = o.seed;
  m.timestamp = utc_timestamp();
  m.output_dir = o.out.empty() && spec ? spec->output_dir : o.out;
  if (o.sigma != 0)
    m.overrides["sigma"] = std::to_string(o.sigma);
  if (o.eps_max >= 0)
    m.overrides["eps_max"] = fmt17(o.eps_max);
  if (o.eps_step > 0)
    m.overrides["eps_step"] = fmt17(o.eps_step);
  if (o.step > 0)
    m.overrides["step"] = fmt17(o.step);
  if (o.tol > 0)
    m.overrides["tol"] = fmt17(o.tol);
  if (o.t_final > 0)
    m.overrides["t_final"] = fmt17(o.t_final);
  if (cmd == "continue")
    m.overrides["kind"] = o.kind;
  return m;
}

ScenarioSpec load_with_overrides(const Options& o)
{
  ScenarioSpec s = load_scenario(o.scenario);
  if (o.eps_max >= 0)
    s.grid.stop = o.eps_max;
  if (o.eps_step > 0)
    s.grid.step = o.eps_step;
  if (s.grid.stop < s.grid.start)
    throw SchemaError("--eps-max below epsilon_grid.start");
  if (o.step > 0)
    s.integrator.step = o.step;
  if (o.sigma != 0)
  {
    if (o.sigma != 1 && o.sigma != -1)
      throw SchemaError("--sigma must be +1 or -1");
    s.sigma = o.sigma;
  }
  if (!o.out.empty())
    s.output_dir = o.out;
  return s;
}

int cmd_verify(const Options& o)
{
  const auto rows = run_suite(o.suite, o.seed);
  std::cout << format_table(rows);
  bool ok = true;
  for (const auto& r : rows)
    ok = ok && r.pass();
  std::cout << (ok ? "all checks passed\n" : "some checks FAILED\n");
  return ok ? 0 : 1;
}

// seed orbit at the first grid value for kinds rpo / po
RPOPoint orbit_seed(const ScenarioSpec& s, const SolverOptions& opt, BodySystem& sys, bool po)
{
  const CurvatureParam p0 = param_at(s.sigma, s.grid.start);
  if (s.kind == ScenarioKind::figure_eight)
  {
    const FigureEight f = load_figure_eight(s.data_path);
    sys = f.sys;
    const PoincareSection sec = make_section(NewtonianModel(sys), p0, f.state);
    return solve_po(p0, sys, sec, f.state, f.period, opt);
  }
  ChartState z;
  double period = 0;
  if (s.kind == ScenarioKind::custom)
  {
    sys = BodySystem(s.masses);
    z = ChartState(s.custom_state);
    period = s.custom_period;
    if (!(period > 0))
      throw SchemaError("field 'period' required for custom orbits");
  }
  else
  {
    const Seed seed = make_seed(s);
    sys = seed.sys;
    z = seed.state;
    period = 2 * std::numbers::pi / seed.omega;
  }
  if (po)
  {
    const PoincareSection sec = make_section(NewtonianModel(sys), p0, z);
    return solve_po(p0, sys, sec, z, period, opt);
  }
  const MomentumValue mu = momentum_nbody(p0, z);
  const AlgebraElement iso = branch_isotropy(p0, mu);
  // flat drift guess: centre-of-mass displacement over one period
  const Vec3 lin(mu(0), mu(1), 0.0);
  const AlgebraElement eta = (lin.dot(iso) * period / sys.total_mass()) * iso;
  return solve_rpo(p0, sys, z, period, eta, mu, opt, hamiltonian(p0, sys, z));
}

int cmd_continue(const Options& o)
{
  const ScenarioSpec s = load_with_overrides(o);
  if (o.kind != "re" && o.kind != "rpo" && o.kind != "po")
    throw SchemaError("--kind must be re, rpo or po");
  SolverOptions opt;
  opt.integrator = s.integrator;
  opt.check_nondegenerate = s.check_nondegenerate;
  if (o.tol > 0)
    opt.tol = o.tol;
  if (o.kind == "rpo" && o.tol <= 0)
    opt.tol = 1e-9;
  const std::vector<double> grid = s.grid.values();
  std::vector<int> sigmas = o.sigma != 0 ? std::vector<int>{o.sigma} : std::vector<int>{1, -1};

  BodySystem sys;
  std::vector<std::future<std::vector<BranchRecord>>> jobs;
  if (o.kind == "re")
  {
    if (s.kind == ScenarioKind::figure_eight)
      throw SchemaError("figure_eight has no relative-equilibrium seed");
    const Seed seed = make_seed(s);
    sys = seed.sys;
    const CurvatureParam p0 = param_at(s.sigma, s.grid.start);
    const REPoint start = solve_re(p0, sys, seed.state, seed.xi, momentum_nbody(p0, seed.state), opt);
    for (int sg : sigmas)
      jobs.push_back(std::async(std::launch::async, [=] { return continue_re(grid, sg, sys, start, opt); }));
  }
  else
  {
    const bool po = o.kind == "po";
    const RPOPoint start = orbit_seed(s, opt, sys, po);
    for (int sg : sigmas)
      jobs.push_back(std::async(std::launch::async, [=] {
        return po ? continue_po(grid, sg, sys, start, opt) : continue_rpo(grid, sg, sys, start, opt);
      }));
  }

  RunManifest man = manifest_for("continue", o, &s);
  man.output_dir = s.output_dir;
  bool ok = true;
  for (std::size_t k = 0; k < jobs.size(); ++k)
  {
    const auto branch = jobs[k].get();
    const std::string stem = "branch_" + o.kind + "_" + sigma_tag(sigmas[k]);
    const fs::path dir(s.output_dir);
    {
      auto os = open_output(dir / (stem + ".csv"));
      write_branch_csv(os, sys, branch);
    }
    write_json(dir / (stem + ".json"), branch_json(sys, branch));
    man.outputs.push_back(stem + ".csv");
    man.outputs.push_back(stem + ".json");

    double reached = -1, worst = 0;
    for (const auto& r : branch)
      if (r.step_accepted)
      {
        reached = r.epsilon;
        worst = std::max(worst, r.residual());
      }
    std::cout << sigma_tag(sigmas[k]) << ": reached eps = " << reached << ", max residual = " << worst
              << ", steps = " << branch.size() << '\n';
    if (!branch.empty() && !branch.back().step_accepted)
    {
      ok = false;
      std::cerr << sigma_tag(sigmas[k]) << ": step eps = " << fmt17(branch.back().epsilon)
                << " failed: " << branch.back().error << '\n';
    }
  }
  write_json(fs::path(s.output_dir) / "manifest.json", man.to_json());
  return ok ? 0 : 1;
}

int cmd_simulate(const Options& o)
{
  const ScenarioSpec s = load_with_overrides(o);
  const CurvatureParam p = param_at(s.sigma, s.grid.start);
  BodySystem sys;
  ChartState z0;
  double period = 0;
  if (s.kind == ScenarioKind::figure_eight)
  {
    const FigureEight f = load_figure_eight(s.data_path);
    sys = f.sys;
    z0 = f.state;
    period = f.period;
  }
  else if (s.kind == ScenarioKind::custom)
  {
    sys = BodySystem(s.masses);
    z0 = ChartState(s.custom_state);
    period = s.custom_period;
  }
  else
  {
    const Seed seed = make_seed(s);
    sys = seed.sys;
    z0 = seed.state;
    period = 2 * std::numbers::pi / seed.omega;
  }
  double t_final = o.t_final > 0 ? o.t_final : (s.t_final > 0 ? s.t_final : period);
  if (!(t_final > 0))
    throw SchemaError("no t_final and no natural period for this scenario");

  const NewtonianModel model(sys);
  const double h0 = hamiltonian(p, sys, z0);
  const MomentumValue mu0 = momentum_nbody(p, z0);
  std::vector<TrajectorySample> samples;
  double dh = 0, dmu = 0;
  const ChartState z1 = flow(model, p, z0, t_final, s.integrator, [&](double t, const ChartState& z) {
    samples.push_back({t, z});
    dh = std::max(dh, std::abs(hamiltonian(p, sys, z) - h0));
    dmu = std::max(dmu, (momentum_nbody(p, z) - mu0).norm());
  });
  const double closure = (z1.z - z0.z).norm();

  const fs::path dir(s.output_dir);
  {
    auto os = open_output(dir / "trajectory.csv");
    write_trajectory_csv(os, p, sys, samples);
  }
  nlohmann::json summary;
  summary["t_final"] = t_final;
  summary["steps"] = samples.size() - 1;
  summary["closure"] = closure;
  summary["max_energy_drift"] = dh;
  summary["max_momentum_drift"] = dmu;
  write_json(dir / "summary.json", summary);
  RunManifest man = manifest_for("simulate", o, &s);
  man.output_dir = s.output_dir;
  man.outputs = {"trajectory.csv", "summary.json"};
  write_json(dir / "manifest.json", man.to_json());

  std::cout << "t_final = " << fmt17(t_final) << "\nclosure |z(T) - z(0)| = " << closure
            << "\nmax |H - H0| = " << dh << "\nmax |mu - mu0| = " << dmu << '\n';
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"continuation of planar n-body orbits to constant curvature"};
  app.set_version_flag("--version", std::string(CURVCONT_VERSION));
  app.require_subcommand(1);
  Options o;

  auto* verify = app.add_subcommand("verify", "run an invariant suite");
  verify->add_option("suite", o.suite, "geometry, symmetry, hamiltonian, dynamics or all")
      ->check(CLI::IsMember({"geometry", "symmetry", "hamiltonian", "dynamics", "all"}));
  verify->add_option("--seed", o.seed, "random seed");

  auto* cont = app.add_subcommand("continue", "continue a branch in eps");
  cont->add_option("--scenario", o.scenario, "scenario file")->required();
  cont->add_option("--kind", o.kind, "re, rpo or po")->check(CLI::IsMember({"re", "rpo", "po"}));

  auto* sim = app.add_subcommand("simulate", "integrate a scenario and dump the trajectory");
  sim->add_option("--scenario", o.scenario, "scenario file")->required();
  sim->add_option("--t-final", o.t_final, "integration time (default: one period)");

  for (auto* sub : {cont, sim})
  {
    sub->add_option("--sigma", o.sigma, "+1 sphere, -1 hyperbolic plane (default both / scenario)");
    sub->add_option("--eps-max", o.eps_max, "last eps of the grid");
    sub->add_option("--eps-step", o.eps_step, "grid spacing");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "seed recorded in the manifest");
    sub->add_option("--step", o.step, "integrator step");
    sub->add_option("--tol", o.tol, "Newton tolerance");
  }

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try
  {
    if (*verify)
      return cmd_verify(o);
    if (*cont)
      return cmd_continue(o);
    return cmd_simulate(o);
  }
  catch (const Error& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return e.numeric() ? 1 : 2;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
