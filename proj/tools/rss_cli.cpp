#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "rss/cli.hpp"

using namespace rss;
using namespace rss::cli;

namespace {

void add_scheme(CLI::App* app, SchemeConfig& s, std::string& kind) {
  app->add_option("--scheme", kind, "rss | nlrss | forward-euler | backward-euler | theta")->capture_default_str();
  app->add_option("--tau", s.tau, "stabilization parameter")->capture_default_str();
  app->add_option("--dt", s.dt, "time step")->capture_default_str();
  app->add_option("--theta", s.theta, "theta-scheme weight")->capture_default_str();
  app->add_flag("--extrapolate", s.extrapolate, "extrapolated variant (2 u_half - u_full)");
}

void add_cavity(CLI::App* app, CavityConfig& c, std::string& lid, bool transport_only_flag) {
  app->add_option("--re", c.re, "Reynolds number")->capture_default_str();
  app->add_option("--n", c.n, "interior points along x")->capture_default_str();
  app->add_option("--ly", c.ly, "cavity height, 1 or 2 (ny = 2n + 1)")->capture_default_str();
  app->add_option("--lid", lid, "A (g = 1), B (g = (1 - (1 - 2x)^2)^2) or none")->capture_default_str();
  app->add_option("--eps", c.eps, "stop when ||(psi^{k+1} - psi^k)/dt|| < eps")->capture_default_str();
  app->add_option("--t-max", c.t_max, "give up (NC) at this time")->capture_default_str();
  app->add_option("--wall-order", c.wall_order, "wall vorticity closure, 2 or 4")->capture_default_str();
  app->add_option("--poisson-tol", c.poisson_tol, "GMRES tolerance of the psi solve")->capture_default_str();
  app->add_option("--nlrss-refresh", c.nlrss_refresh, "rebuild the NLRSS operator every m steps")
      ->capture_default_str();
  app->add_option("--krylov-tol", c.krylov_tol, "tolerance of the NLRSS inner solves")->capture_default_str();
  app->add_option("--blowup", c.blowup, "blow-up threshold on |omega|, |psi|")->capture_default_str();
  app->add_option("--max-steps", c.max_steps, "step limit, < 0 for none")->capture_default_str();
  if (transport_only_flag)
    app->add_flag("!--coupled-extrapolation,--transport-extrapolation", c.coupled_extrapolation,
                  "extrapolate the vorticity transport only, walls frozen");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilized semi-implicit time stepping experiments"};
  app.set_config("--config", "", "key = value file ([command] sections); flags override it");
  std::string out_flag;
  bool no_files = false;
  app.add_option("-o,--output-dir", out_flag, "output directory (default: $RSS_OUTPUT_DIR, else rss-output)");
  app.add_flag("--no-files", no_files, "print the report only");
  app.require_subcommand(1);
  app.fallthrough();

  PoissonOptions po;
  auto* poisson = app.add_subcommand("poisson", "preconditioned GMRES on the compact Poisson problem");
  poisson->add_option("--dim", po.dim, "2 or 3")->capture_default_str();
  poisson->add_option("--n", po.n, "interior points per direction")->capture_default_str();
  poisson->add_option("--runs", po.runs, "random right-hand sides")->capture_default_str();
  poisson->add_option("--seed", po.seed, "RNG seed")->capture_default_str();
  poisson->add_option("--tol", po.tol, "relative residual tolerance")->capture_default_str();
  poisson->add_option("--restart", po.restart, "GMRES restart length")->capture_default_str();
  poisson->add_flag("--identity", po.identity, "use A = Id (sanity check)");

  HeatOptions ho;
  std::string heat_kind = "rss";
  auto* heat = app.add_subcommand("heat", "heat equation with a manufactured solution");
  heat->add_option("--dim", ho.dim, "1 or 2")->capture_default_str();
  heat->add_option("--n", ho.n, "interior points per direction")->capture_default_str();
  add_scheme(heat, ho.scheme, heat_kind);
  heat->add_option("--t-final", ho.t_final, "final time")->capture_default_str();
  heat->add_option("--history-stride", ho.history_stride, "record every k-th step")->capture_default_str();

  AllenCahnOptions ao;
  auto* ac = app.add_subcommand("allen-cahn", "Allen-Cahn energy runs");
  ac->add_option("--n", ao.n, "cells per direction")->capture_default_str();
  ac->add_option("--epsilon", ao.epsilon, "interface width")->capture_default_str();
  ac->add_option("--lipschitz", ao.lipschitz, "bound on |f'|")->capture_default_str();
  ac->add_option("--tau", ao.tau, "stabilization parameter")->capture_default_str();
  ac->add_option("--dt", ao.dt, "time step, <= 0 for 0.9 times the analytic bound")->capture_default_str();
  ac->add_flag("--extrapolate", ao.extrapolate, "extrapolated variant");
  ac->add_option("--steps", ao.steps, "number of steps")->capture_default_str();
  ac->add_option("--seed", ao.seed, "RNG seed of the initial state")->capture_default_str();
  ac->add_option("--amplitude", ao.amplitude, "initial state amplitude")->capture_default_str();
  ac->add_option("--history-stride", ao.history_stride, "record every k-th step")->capture_default_str();

  CavityConfig co;
  std::string cav_kind = "rss", cav_lid = "A";
  auto* cavity = app.add_subcommand("cavity", "driven cavity to steady state");
  add_cavity(cavity, co, cav_lid, true);
  add_scheme(cavity, co.scheme, cav_kind);
  cavity->add_option("--history-stride", co.history_stride, "record every k-th residual")->capture_default_str();

  StabilityOptions so;
  auto* stability = app.add_subcommand("stability", "analytic vs empirical dt_max");
  stability->add_option("--problem", so.problem, "heat1d or heat2d")->capture_default_str();
  stability->add_option("--n", so.n, "interior points per direction")->capture_default_str();
  stability->add_option("--tau-beta", so.tau_beta, "tau values as multiples of beta")->capture_default_str();
  stability->add_option("--tau", so.tau, "additional absolute tau values");
  stability->add_option("--steps", so.steps, "steps per stability probe")->capture_default_str();
  stability->add_option("--seed", so.seed, "RNG seed of the probe state")->capture_default_str();

  SweepOptions wo;
  std::string sweep_lid = "A";
  std::vector<std::string> rows;
  auto* sweep = app.add_subcommand("sweep", "cavity T_c table over (tau, dt, scheme) rows");
  add_cavity(sweep, wo.base, sweep_lid, true);
  sweep->add_option("--row", rows, "tau:dt:scheme with scheme rss, rss-x, nlrss or nlrss-x (repeatable)");
  sweep->add_option("--jobs", wo.jobs, "rows run concurrently")->capture_default_str();
  sweep->add_flag("--bisect-dtmax", wo.bisect_dtmax, "also bisect the empirical dt_max of each row");
  sweep->add_option("--bisect-steps", wo.bisect_steps, "steps per dt_max probe")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitConverged : kExitUsage;
  }

  const std::filesystem::path out = no_files ? std::filesystem::path() : resolve_output_dir(out_flag);
  try {
    Json report;
    if (*poisson) {
      report = cmd_poisson(po, out);
    } else if (*heat) {
      ho.scheme.kind = scheme_from_string(heat_kind);
      report = cmd_heat(ho, out);
    } else if (*ac) {
      report = cmd_allen_cahn(ao, out);
    } else if (*cavity) {
      co.scheme.kind = scheme_from_string(cav_kind);
      co.lid = lid_from_string(cav_lid);
      report = cmd_cavity(co, out);
    } else if (*stability) {
      report = cmd_stability(so, out);
    } else if (*sweep) {
      wo.base.lid = lid_from_string(sweep_lid);
      for (const std::string& r : rows) wo.rows.push_back(parse_sweep_row(r));
      report = cmd_sweep(wo, out);
    }
    std::cout << report.dump(2) << '\n';
    return report.at("exit_code").get<int>();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
