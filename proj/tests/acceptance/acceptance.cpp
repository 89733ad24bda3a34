// Acceptance suite: one PASS/FAIL line per criterion. Every tolerance is
// pinned here; detail lines are indented.

#include <CLI11.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rss/cavity.hpp"
#include "rss/cli.hpp"
#include "rss/compact.hpp"
#include "rss/problems.hpp"
#include "rss/solvers.hpp"
#include "rss/stability.hpp"
#include "rss/timestep.hpp"

using namespace rss;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::numbers::pi;

namespace {

// ------------------------------------------------------------ reporting

struct Verdict {
  bool pass = true;
  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
};

void Verdict::check(bool ok, const char* fmt, ...) {
  pass = pass && ok;
  std::printf("    [%s] ", ok ? "ok" : "FAIL");
  va_list args;
  va_start(args, fmt);
  std::vprintf(fmt, args);
  va_end(args);
  std::printf("\n");
  std::fflush(stdout);
}

void info(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void info(const char* fmt, ...) {
  std::printf("    ");
  va_list args;
  va_start(args, fmt);
  std::vprintf(fmt, args);
  va_end(args);
  std::printf("\n");
  std::fflush(stdout);
}

// ------------------------------------------------------------ helpers

MatrixXd random_spd(Index n, std::mt19937_64& rng, double shift) {
  std::uniform_real_distribution<double> u(-1, 1);
  const MatrixXd m = MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
  return m * m.transpose() + shift * MatrixXd::Identity(n, n);
}

VectorXd random_vec(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  return VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

SemilinearProblem dense_problem(const MatrixXd& a, const MatrixXd& b) {
  SemilinearProblem p;
  p.A = LinearOperator::from_dense(a);
  p.B = make_dense_stabilizer(b);
  return p;
}

double spectral_norm(const MatrixXd& m) { return m.jacobiSvd().singularValues()(0); }

/// Cached Stokes states per (n, ly); the Stokes problem has no Re dependence.
const FlowState& stokes_state(const CavityConfig& c) {
  static std::map<std::pair<Index, double>, FlowState> cache;
  const auto key = std::make_pair(c.n, c.ly);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const auto t0 = std::chrono::steady_clock::now();
    it = cache.emplace(key, CavitySolver(c).stokes_init()).first;
    info("Stokes state n=%ld ly=%g: %.1f s", static_cast<long>(c.n), c.ly,
         std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return it->second;
}

CavityResult run_cavity(const CavityConfig& c) {
  CavitySolver s(c);
  CavityResult r = s.run(stokes_state(c));
  const VortexPoint& v = r.vortices.primary;
  info("Re=%g n=%ld ly=%g %s%s tau=%g dt=%g eps=%g: %s T_c=%.4g steps=%ld (%.0f s); primary %.5f at (%.4f, %.4f)",
       c.re, static_cast<long>(c.n), c.ly, to_string(c.scheme.kind), c.scheme.extrapolate ? "-x" : "",
       c.scheme.tau, c.scheme.dt, c.eps, to_string(r.outcome), r.tc, r.steps, r.seconds,
       r.state.psi.allFinite() ? v.value : std::nan(""), v.x, v.y);
  return r;
}

CavityConfig cavity(double re, Index n, double tau, double dt, double eps, bool extrapolate,
                    SchemeKind kind = SchemeKind::RSS) {
  CavityConfig c;
  c.re = re;
  c.n = n;
  c.scheme.tau = tau;
  c.scheme.dt = dt;
  c.scheme.extrapolate = extrapolate;
  c.scheme.kind = kind;
  c.eps = eps;
  c.history_stride = 0;
  return c;
}

/// Relative deviation |got - want| / want.
double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

// ------------------------------------------------------------ criteria

bool criterion1() {
  Verdict v;
  const std::vector<std::pair<Index, int>> two{{15, 13}, {31, 12}, {63, 11}, {127, 11}};
  const std::vector<std::pair<Index, int>> three{{15, 13}, {31, 12}};
  for (int dim : {2, 3}) {
    for (const auto& [n, limit] : dim == 2 ? two : three) {
      cli::PoissonOptions o;
      o.dim = dim;
      o.n = n;
      o.runs = 5;
      o.tol = 1e-12;
      const cli::Json r = cli::cmd_poisson(o);
      const int it = r["results"]["max_iterations"].get<int>();
      v.check(r["outcome"] == "converged" && it <= limit, "%dD n=%ld: max GMRES iterations %d (limit %d)", dim,
              static_cast<long>(n), it, limit);
    }
  }
  return v.pass;
}

template <typename Op, typename Exact>
double max_error_1d(Index n, Op build, Exact exact, double u(double)) {
  const Grid1D g = Grid1D::dirichlet(n);
  const auto op = build(g);
  const VectorXd x = g.nodes();
  const VectorXd s = x.unaryExpr(u);
  return (op.apply(s) - x.unaryExpr(exact)).template lpNorm<Eigen::Infinity>();
}

bool criterion2() {
  Verdict v;
  auto sinpi = [](double x) { return std::sin(pi * x); };
  auto d1_exact = [](double x) { return pi * std::cos(pi * x); };
  auto d2_exact = [](double x) { return pi * pi * std::sin(pi * x); };  // operators approximate -u''
  auto ratio = [](double coarse, double fine) { return coarse / fine; };

  // 1D
  const double c1 = ratio(max_error_1d(32, build_compact_d1<double>, d1_exact, +sinpi),
                          max_error_1d(64, build_compact_d1<double>, d1_exact, +sinpi));
  const double c2 = ratio(max_error_1d(32, build_compact_d2<double>, d2_exact, +sinpi),
                          max_error_1d(64, build_compact_d2<double>, d2_exact, +sinpi));
  const double f1 = ratio(max_error_1d(32, build_fd2_d1<double>, d1_exact, +sinpi),
                          max_error_1d(64, build_fd2_d1<double>, d1_exact, +sinpi));
  const double f2 = ratio(max_error_1d(32, build_fd2_d2<double>, d2_exact, +sinpi),
                          max_error_1d(64, build_fd2_d2<double>, d2_exact, +sinpi));
  v.check(c1 >= 12 && c1 <= 20, "1D compact d1 ratio %.3f in [12, 20]", c1);
  v.check(c2 >= 12 && c2 <= 20, "1D compact d2 ratio %.3f in [12, 20]", c2);
  v.check(f1 >= 3.4 && f1 <= 4.6, "1D second-order d1 ratio %.3f in [3.4, 4.6]", f1);
  v.check(f2 >= 3.4 && f2 <= 4.6, "1D second-order d2 ratio %.3f in [3.4, 4.6]", f2);

  // 2D on sin(pi x) sin(pi y): d/dx and the Laplacian
  auto err2d = [&](Index n, bool compact, bool second) {
    const Grid1D g1 = Grid1D::dirichlet(n);
    const Grid2D g{g1, g1};
    LinearOperator op;
    if (compact)
      op = second ? kron_sum_2d(build_compact_d2(g1), build_compact_d2(g1), g) : along_x(build_compact_d1(g1), g);
    else
      op = second ? kron_sum_2d(build_fd2_d2(g1), build_fd2_d2(g1), g) : along_x(build_fd2_d1(g1), g);
    VectorXd u(g.size()), ex(g.size());
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        const double x = g1.node(i), y = g1.node(j);
        u[g.index(i, j)] = std::sin(pi * x) * std::sin(pi * y);
        ex[g.index(i, j)] = second ? 2 * pi * pi * u[g.index(i, j)] : pi * std::cos(pi * x) * std::sin(pi * y);
      }
    return (op * u - ex).lpNorm<Eigen::Infinity>();
  };
  const double e1 = err2d(32, true, false) / err2d(64, true, false);
  const double e2 = err2d(32, true, true) / err2d(64, true, true);
  const double s1 = err2d(32, false, false) / err2d(64, false, false);
  const double s2 = err2d(32, false, true) / err2d(64, false, true);
  v.check(e1 >= 12 && e1 <= 20, "2D compact d1 ratio %.3f in [12, 20]", e1);
  v.check(e2 >= 12 && e2 <= 20, "2D compact Laplacian ratio %.3f in [12, 20]", e2);
  v.check(s1 >= 3.4 && s1 <= 4.6, "2D second-order d1 ratio %.3f in [3.4, 4.6]", s1);
  v.check(s2 >= 3.4 && s2 <= 4.6, "2D second-order Laplacian ratio %.3f in [3.4, 4.6]", s2);
  return v.pass;
}

double fitted_slope(const std::vector<double>& dt, const std::vector<double>& err) {
  const Index m = static_cast<Index>(dt.size());
  Eigen::MatrixXd x(m, 2);
  Eigen::VectorXd y(m);
  for (Index k = 0; k < m; ++k) {
    x(k, 0) = 1.0;
    x(k, 1) = std::log(dt[static_cast<std::size_t>(k)]);
    y[k] = std::log(err[static_cast<std::size_t>(k)]);
  }
  return x.colPivHouseholderQr().solve(y)[1];
}

bool criterion3() {
  Verdict v;
  const HeatProblem p = make_heat_1d(127);
  const double t_final = 0.2;
  const std::vector<double> dts{4e-3, 2e-3, 1e-3, 5e-4};
  for (bool extrapolate : {false, true}) {
    std::vector<double> errs;
    for (double dt : dts) {
      SchemeConfig cfg{SchemeKind::RSS, 1.0, 1.0, dt, extrapolate};
      VectorXd u = p.exact(0.0);
      const long steps = std::lround(t_final / dt);
      for (long k = 0; k < steps; ++k) u = step(p.system, u, cfg);
      errs.push_back((u - p.exact(t_final)).lpNorm<Eigen::Infinity>());
    }
    const double s = fitted_slope(dts, errs);
    info("%s errors at t=%g: %.3e %.3e %.3e %.3e", extrapolate ? "extrapolated" : "RSS", t_final, errs[0], errs[1],
         errs[2], errs[3]);
    if (extrapolate)
      v.check(std::abs(s - 2.0) <= 0.2, "extrapolated RSS fitted order %.3f (2 +- 0.2)", s);
    else
      v.check(std::abs(s - 1.0) <= 0.15, "RSS fitted order %.3f (1 +- 0.15)", s);
  }
  return v.pass;
}

bool criterion4() {
  Verdict v;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> size(2, 12);
  EmpiricalOptions eo;
  eo.steps = 500;
  int below = 0, unstable_high = 0, low_gain = 0, checked = 0;
  double worst_gain = kInf, worst_ratio = kInf;
  for (int pair = 0; pair < 200; ++pair) {
    const Index n = size(rng);
    const MatrixXd a = random_spd(n, rng, 0.1), b = random_spd(n, rng, 0.1);
    const Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ge(a, b, Eigen::EigenvaluesOnly);
    const double beta = ge.eigenvalues().maxCoeff();
    const double rho = Eigen::SelfAdjointEigenSolver<MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const SemilinearProblem p = dense_problem(a, b);
    const VectorXd u0 = random_vec(n, rng);
    const double fe = 2.0 / rho, cap = 1e3 * fe;
    SchemeConfig cfg{SchemeKind::RSS, 0.0, 1.0, fe};
    const double emp0 = empirical_dtmax(p, cfg, cap, u0, eo);
    for (double frac : {0.0, 0.25, 0.5, 1.0}) {
      cfg.tau = frac * beta;
      const StabilityReport an = dtmax_linear(cfg.tau, beta, rho);
      ++checked;
      if (an.regime == Regime::Unconditional) {
        // no instability anywhere up to 1e3 times the explicit limit
        for (double f = 1.0; f <= 1e3 * (1 + 1e-12); f *= std::sqrt(10.0)) {
          cfg.dt = f * fe;
          if (!stable_run(p, cfg, u0, eo)) {
            ++unstable_high;
            break;
          }
        }
        continue;
      }
      const double emp = frac == 0.0 ? emp0 : empirical_dtmax(p, cfg, cap, u0, eo);
      worst_ratio = std::min(worst_ratio, emp / an.dt_max);
      if (emp < an.dt_max * (1 - eo.rel_width)) ++below;
      const double gain = emp / emp0, kappa = stability_gain(cfg.tau, beta);
      worst_gain = std::min(worst_gain, gain / kappa);
      if (gain < 0.95 * kappa) ++low_gain;
    }
  }
  v.check(below == 0,
          "random SPD pairs: empirical >= analytic dt_max less the bisection width %.0e (%d of %d below, worst "
          "empirical/analytic %.4f)",
          eo.rel_width, below, checked, worst_ratio);
  v.check(unstable_high == 0, "random SPD pairs, tau >= beta/2: stable up to 1e3 x forward Euler (%d unstable)",
          unstable_high);
  v.check(low_gain == 0, "random SPD pairs: gain >= 0.95 kappa (%d low, worst gain/kappa %.4f)", low_gain,
          worst_gain);

  // the 1D compact pair A4 / A2
  cli::StabilityOptions so;
  so.problem = "heat1d";
  so.n = 15;
  so.tau_beta = {0.0, 0.25, 0.5};
  const cli::Json r = cli::cmd_stability(so);
  const cli::Json& t = r["results"]["table"];
  v.check(r["results"]["all_empirical_ge_analytic"] == true, "A4/A2 n=15: empirical >= analytic for all tau");
  v.check(t[2]["capped"] == true, "A4/A2 n=15, tau = beta/2: stable up to 1e3 x forward Euler");
  const double gain = t[1]["empirical"].get<double>() / t[0]["empirical"].get<double>();
  v.check(gain >= 0.95 * 2.0, "A4/A2 n=15, tau = beta/4: gain %.4f >= 0.95 * 2", gain);
  return v.pass;
}

bool criterion5() {
  Verdict v;
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(2, 12);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  EmpiricalOptions eo;
  eo.steps = 500;
  int unstable = 0, probes = 0, violated = 0, discontinuous = 0;
  double worst_jump = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Index n = size(rng);
    const MatrixXd s = random_spd(n, rng, 0.5), b = random_spd(n, rng, 1.0);
    const double lmin_s = Eigen::SelfAdjointEigenSolver<MatrixXd>(s).eigenvalues().minCoeff();
    MatrixXd skew = MatrixXd::NullaryExpr(n, n, [&] { return 2 * frac(rng) - 1; });
    skew = skew - skew.transpose().eval();
    const double target = 0.1 * lmin_s * frac(rng);
    if (spectral_norm(skew) > 0) skew *= target / (2 * spectral_norm(skew));
    const MatrixXd a = s + skew;
    const double delta = spectral_norm(a - a.transpose());
    const Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ge(s, b, Eigen::EigenvaluesOnly);
    const double alpha = ge.eigenvalues().minCoeff(), beta = ge.eigenvalues().maxCoeff();
    const VectorXd lb = Eigen::SelfAdjointEigenSolver<MatrixXd>(b).eigenvalues();
    const double lmin_b = lb.minCoeff(), lmax_b = lb.maxCoeff();
    const double rho = a.eigenvalues().cwiseAbs().maxCoeff();

    const double c = beta * beta / (2 * alpha);
    const double dmin = delta * delta / (8 * alpha * lmin_b * lmin_b);
    const double dmax = delta * delta / (8 * alpha * lmax_b * lmax_b);
    if (c - dmin < 0) {
      ++violated;
      continue;
    }
    auto bound = [&](double tau) { return dtmax_nonsymmetric(tau, alpha, beta, lmin_b, lmax_b, delta).dt_max; };

    // one tau inside each branch
    const SemilinearProblem p = dense_problem(a, b);
    const VectorXd u0 = random_vec(n, rng);
    for (double tau : {0.0, 0.5 * (c - dmin), 0.5 * (2 * c - dmin - dmax), 0.5 * (2 * c - dmax + dmin), c + dmin}) {
      if (tau < 0) continue;
      const double dtm = bound(tau);
      const double top = std::isfinite(dtm) ? dtm : 1e3 * 2.0 / rho;
      for (double f : {0.1, 0.5, 0.9, 0.99}) {
        SchemeConfig cfg{SchemeKind::RSS, tau, 1.0, f * top};
        ++probes;
        if (!stable_run(p, cfg, u0, eo)) ++unstable;
      }
    }
    // continuity of 1/dt_max across the branch boundaries
    const double scale = 1.0 / bound(0.0);
    for (double tb : {c - dmin, c - dmax, c + dmin}) {
      const double eta = 1e-9 * c;
      if (tb - eta < 0) continue;
      const double lo = 1.0 / bound(tb - eta), hi = 1.0 / bound(tb + eta);
      const double jump = std::abs(lo - hi) / scale;
      worst_jump = std::max(worst_jump, jump);
      if (jump > 1e-6) ++discontinuous;
    }
  }
  info("%d of 50 pairs skipped for a violated hypothesis", violated);
  v.check(unstable == 0, "no instability below the bound (%d of %d probes unstable)", unstable, probes);
  v.check(discontinuous == 0, "branch continuity: largest relative jump of 1/dt_max %.2e (<= 1e-6)", worst_jump);
  v.check(violated < 50, "hypothesis holds for at least one pair");
  return v.pass;
}

bool criterion6() {
  Verdict v;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const MatrixXd a = MatrixXd::NullaryExpr(8, 8, [&] { return u(rng); });
    const MatrixXd b = MatrixXd::NullaryExpr(8, 8, [&] { return u(rng); });
    const double formula = tau_opt(a, b);
    // brute force on a 1e-4 grid over [-10, 10]
    double best = kInf, arg = 0.0;
    for (long i = -100000; i <= 100000; ++i) {
      const double tau = 1e-4 * static_cast<double>(i);
      const double f = (tau * b - a).norm();
      if (f < best) best = f, arg = tau;
    }
    worst = std::max(worst, std::abs(formula - arg));
    if (std::abs(arg) >= 10.0) info("pair %d: grid minimizer at the edge", k);
  }
  v.check(worst <= 1e-4, "20 random 8x8 pairs: |formula - grid minimizer| <= %.2e (<= 1e-4)", worst);

  const MatrixXd a = MatrixXd::NullaryExpr(8, 8, [&] { return u(rng); });
  const double t = tau_opt(a, MatrixXd::Identity(8, 8));
  v.check(t == a.trace() / 8.0, "B = Id: tau_opt %.17g == trace(A)/n %.17g", t, a.trace() / 8.0);
  return v.pass;
}

bool criterion7() {
  Verdict v;
  const Index n = 10;
  const Grid1D g = Grid1D::dirichlet(n);
  const MatrixXd a = build_compact_d2(g).to_dense();
  const MatrixXd b = build_fd2_d2(g).to_dense();
  const MatrixXd id = MatrixXd::Identity(n, n);
  std::mt19937_64 rng(7);
  const VectorXd f = random_vec(n, rng);
  const VectorXd v0 = random_vec(n, rng);

  // the bound only applies where ||M|| < 1
  int applicable = 0, violated = 0, lib_violated = 0;
  for (double tau : {0.5, 1.0, 2.0}) {
    for (double dt : {1e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2}) {
      const MatrixXd m = id - dt * (id + tau * dt * b).inverse() * a;
      const double norm_m = spectral_norm(m);
      if (norm_m >= 1) {
        info("tau=%g dt=%g: ||M|| = %.4f, hypothesis fails, skipped", tau, dt, norm_m);
        continue;
      }
      ++applicable;
      const double gamma = spectral_norm((id - dt * a) * (id + dt * a).inverse());
      const double bound = dt * dt * spectral_norm(tau * b - a) / (1 - gamma) * (f - a * v0).norm();
      const auto lu_k = (id + tau * dt * b).partialPivLu();
      const auto lu_be = (id + dt * a).partialPivLu();
      SemilinearProblem p = dense_problem(a, b);
      p.forcing = f;
      const SchemeConfig cfg{SchemeKind::RSS, tau, 1.0, dt};
      VectorXd u = v0, w = v0, ul = v0, wl = v0;
      double worst = 0.0, lib = 0.0;
      for (int k = 1; k <= 500; ++k) {
        u += lu_k.solve(dt * (f - a * u));
        w = lu_be.solve(w + dt * f);
        ul = step(p, ul, cfg);
        wl = step_backward_euler_linear(p, wl, dt);
        worst = std::max(worst, (u - w).norm());
        lib = std::max(lib, (ul - wl).norm());
      }
      info("tau=%g dt=%g: ||M|| = %.4f, gamma = %.4f, max gap %.3e (library %.3e), bound %.3e", tau, dt, norm_m,
           gamma, worst, lib, bound);
      if (worst > bound) ++violated;
      if (lib > bound) ++lib_violated;
    }
  }
  v.check(applicable >= 6, "hypothesis ||M|| < 1 holds in %d of 18 (tau, dt) cases (>= 6 needed)", applicable);
  v.check(violated == 0, "dense sequences: gap within the bound at every step (%d cases violate)", violated);
  v.check(lib_violated == 0, "library RSS and backward Euler steps: gap within the bound (%d cases violate)",
          lib_violated);
  return v.pass;
}

bool criterion8() {
  Verdict v;
  for (double eps : {0.1, 0.05}) {
    const AllenCahnProblem p = make_allen_cahn(63, eps);
    const double rho = spectral_radius(p.system.A);
    const StabilityReport bound = dtmax_allen_cahn(1.0, 1.0, 0.0, rho, p.lipschitz, eps);
    const double dt = 0.9 * bound.dt_max;
    const EnergyRecord rec = run_allen_cahn(p, ac_initial_state(p.grid.size()), {SchemeKind::RSS, 1.0, 1.0, dt}, 1000);
    v.check(rec.max_increase <= 1e-10,
            "eps=%g, tau=1, dt=%.5g (case %s, bound %.5g): max energy increase %.3e over 1000 steps (<= 1e-10)", eps,
            dt, bound.case_label.c_str(), bound.dt_max, rec.max_increase);
    for (double c : {0.0, 1.0, -1.0}) {
      const VectorXd u = VectorXd::Constant(p.grid.size(), c);
      const double d = (step(p.system, u, {SchemeKind::RSS, 1.0, 1.0, dt}) - u).lpNorm<Eigen::Infinity>();
      v.check(d <= 1e-12, "eps=%g: u = %g is a fixed point (moved %.2e)", eps, c, d);
    }
  }
  return v.pass;
}

void check_vortex(Verdict& v, const CavityResult& r, double value, double x, double y, double h, const char* what) {
  const VortexPoint& p = r.vortices.primary;
  const bool conv = r.outcome == Outcome::Converged;
  v.check(conv, "%s: run converged (%s)", what, to_string(r.outcome));
  if (!conv) return;
  // table locations are printed to 4 decimals
  const double cell = h + 1e-4;
  v.check(std::abs(p.value - value) <= 0.005, "%s: intensity %.5f vs %.4f +- 0.005", what, p.value, value);
  v.check(std::abs(p.x - x) <= cell && std::abs(p.y - y) <= cell,
          "%s: location (%.4f, %.4f) vs (%.4f, %.4f) within one cell (h = %.5f)", what, p.x, p.y, x, y, h);
}

bool criterion9() {
  Verdict v;
  const double h = 1.0 / 128.0;
  check_vortex(v, run_cavity(cavity(100, 127, 1, 0.001, 1e-3, true)), 0.1026, 0.6172, 0.7422, h, "Re=100");
  const CavityResult r400 = run_cavity(cavity(400, 127, 1, 0.017, 1e-3, true));
  check_vortex(v, r400, 0.1123, 0.5625, 0.6094, h, "Re=400, dt=0.017");
  if (r400.outcome != Outcome::Converged) {
    // not part of the verdict: the same steady state at a step that is stable here
    const CavityResult alt = run_cavity(cavity(400, 127, 1, 0.01, 1e-3, true));
    info("Re=400 at dt=0.01 (informational): %s, primary %.5f at (%.4f, %.4f)", to_string(alt.outcome),
         alt.vortices.primary.value, alt.vortices.primary.x, alt.vortices.primary.y);
  }
  return v.pass;
}

bool criterion10() {
  Verdict v;
  auto tc_check = [&](const CavityConfig& c, double want, const char* what) {
    const CavityResult r = run_cavity(c);
    const bool ok = r.outcome == Outcome::Converged && rel(r.tc, want) <= 0.15;
    v.check(ok, "%s: T_c %s vs %.4g +- 15%% (%+.1f%%)", what, outcome_label(r.outcome, r.tc).c_str(), want,
            r.outcome == Outcome::Converged ? 100 * (r.tc - want) / want : std::nan(""));
  };
  tc_check(cavity(100, 63, 1, 0.01, 1e-5, false), 15.62, "Re=100 n=63 tau=1 dt=0.01 RSS");
  tc_check(cavity(100, 63, 30, 0.3, 1e-5, false), 54.5, "Re=100 n=63 tau=30 dt=0.3 RSS");
  const CavityResult b = run_cavity(cavity(1000, 127, 1, 0.02, 1e-5, false));
  v.check(b.outcome == Outcome::BlowUp, "Re=1000 n=127 tau=1 dt=0.02 RSS: outcome %s (expected ***)",
          to_string(b.outcome));
  tc_check(cavity(1000, 127, 1, 0.02, 1e-5, true, SchemeKind::NLRSS), 56.96,
           "Re=1000 n=127 tau=1 dt=0.02 NLRSS extrapolated");
  return v.pass;
}

bool criterion11() {
  Verdict v;
  const double h = 1.0 / 128.0;
  check_vortex(v, run_cavity(cavity(1000, 127, 1, 0.01, 1e-3, true)), 0.1158, 0.5391, 0.5703, h, "Re=1000");
  const CavityResult r = run_cavity(cavity(3200, 127, 10, 0.1, 1e-5, false, SchemeKind::NLRSS));
  v.check(r.outcome == Outcome::Converged && rel(r.tc, 223.9) <= 0.2,
          "Re=3200 n=127 NLRSS tau=10 dt=0.1: T_c %s vs 223.9 +- 20%%", outcome_label(r.outcome, r.tc).c_str());
  CavityConfig rect = cavity(3200, 255, 1, 0.001, 1e-3, true);
  rect.ly = 2.0;
  const CavityResult rr = run_cavity(rect);
  const VortexPoint& p = rr.vortices.primary;
  const double hr = 1.0 / 256.0 + 1e-4;
  v.check(rr.outcome == Outcome::Converged && std::abs(p.value - 0.0196) <= 0.005 &&
              std::abs(p.x - 0.4492) <= hr && std::abs(p.y - 0.6914) <= hr,
          "Re=3200 255x511: max %.5f at (%.4f, %.4f) vs 0.0196 at (0.4492, 0.6914)", p.value, p.x, p.y);
  return v.pass;
}

const std::vector<std::pair<const char*, std::function<bool()>>>& criteria() {
  static const std::vector<std::pair<const char*, std::function<bool()>>> list{
      {"Poisson GMRES iteration counts", criterion1},
      {"compact operator order", criterion2},
      {"time accuracy slopes", criterion3},
      {"linear stability sufficiency and gain", criterion4},
      {"nonsymmetric stability bound", criterion5},
      {"tau_opt formula", criterion6},
      {"consistency gap bound", criterion7},
      {"Allen-Cahn energy stability", criterion8},
      {"cavity benchmark vortices", criterion9},
      {"steady-state time spot checks", criterion10},
      {"extended cavity runs", criterion11},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> which;
  bool extended = false;
  app.add_option("--criterion", which, "criteria to run (default 1-10)")->check(CLI::Range(1, 11));
  app.add_flag("--extended", extended, "also run criterion 11 (hours)");
  CLI11_PARSE(app, argc, argv);
  if (which.empty())
    for (int c = 1; c <= 10; ++c) which.push_back(c);
  if (extended && std::find(which.begin(), which.end(), 11) == which.end()) which.push_back(11);

  int failed = 0;
  for (int c : which) {
    const auto& [name, fn] = criteria()[static_cast<std::size_t>(c - 1)];
    std::printf("criterion %d: %s\n", c, name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      info("exception: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", c, name, secs);
    std::fflush(stdout);
    failed += ok ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
