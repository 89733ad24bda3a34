#include "rss/cli.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "rss/compact.hpp"
#include "rss/problems.hpp"
#include "rss/solvers.hpp"
#include "rss/stability.hpp"

namespace rss::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Json base_report(const char* command, Json config) {
  Json r;
  r["schema"] = kReportSchema;
  r["command"] = command;
  r["config"] = std::move(config);
  return r;
}

void finish(Json& r, Outcome o, Json results, double secs) {
  r["outcome"] = to_string(o);
  r["exit_code"] = exit_code(o);
  r["results"] = std::move(results);
  r["timing"] = {{"seconds", secs}};
}

void write_text(const fs::path& file, const std::string& s) {
  std::ofstream f(file, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::InvalidArgument, "cannot write " + file.string());
  f << s;
}

std::string read_text(const fs::path& file) {
  std::ifstream f(file, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::InvalidArgument, "cannot read " + file.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void save_outputs(const fs::path& out, const Json& report) {
  if (out.empty()) return;
  fs::create_directories(out);
  write_text(out / "config.json", report["config"].dump(2) + "\n");
  write_report(report, out / "report.json");
}

/// Infinite or NaN values are stored as JSON null.
Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  require(ec == std::errc() && p == end, ErrorCode::InvalidArgument, "not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

std::string scalar_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const std::string t = v.get<std::string>();
    require(t.find_first_of(",\"\n") == std::string::npos, ErrorCode::InvalidArgument,
            "table strings must not contain commas, quotes or newlines");
    return '"' + t + '"';
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) return format_double(v.get<double>());
  throw Error(ErrorCode::InvalidArgument, "table cells must be scalars");
}

Json parse_cell(const std::string& s) {
  if (s.empty()) return nullptr;
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  require(Json::accept(s), ErrorCode::InvalidArgument, "bad table cell '" + s + "'");
  Json v = Json::parse(s);
  require(v.is_number() || v.is_boolean(), ErrorCode::InvalidArgument, "bad table cell '" + s + "'");
  return v;
}

}  // namespace

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::Converged: return kExitConverged;
    case Outcome::NotConverged: return kExitNotConverged;
    case Outcome::BlowUp: return kExitBlowUp;
  }
  return kExitUsage;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

// ---------------------------------------------------------------- files

void write_field(const fs::path& file, const Eigen::MatrixXd& f, double h) {
  std::string s;
  s += std::to_string(f.rows()) + "\n" + std::to_string(f.cols()) + "\n" + format_double(h) + "\n";
  for (Index j = 0; j < f.cols(); ++j) {
    for (Index i = 0; i < f.rows(); ++i) {
      if (i) s += ' ';
      s += format_double(f(i, j));
    }
    s += '\n';
  }
  write_text(file, s);
}

FieldDump read_field(const fs::path& file) {
  std::istringstream in(read_text(file));
  std::string a, b, c;
  require(static_cast<bool>(in >> a >> b >> c), ErrorCode::InvalidArgument, "field header");
  const Index nx = std::stol(a), ny = std::stol(b);
  FieldDump d;
  d.h = parse_double(c);
  d.values.resize(nx, ny);
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      std::string tok;
      require(static_cast<bool>(in >> tok), ErrorCode::InvalidArgument, "field truncated");
      d.values(i, j) = parse_double(tok);
    }
  return d;
}

void write_history(const fs::path& file, const std::vector<HistoryPoint>& h, const std::string& name) {
  std::string s = "t," + name + "\n";
  for (const HistoryPoint& p : h) s += format_double(p.t) + "," + format_double(p.value) + "\n";
  write_text(file, s);
}

std::vector<HistoryPoint> read_history(const fs::path& file) {
  std::istringstream in(read_text(file));
  std::string line;
  std::getline(in, line);
  std::vector<HistoryPoint> h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    require(parts.size() == 2, ErrorCode::InvalidArgument, "history line '" + line + "'");
    h.push_back({parse_double(parts[0]), parse_double(parts[1])});
  }
  return h;
}

std::string table_to_csv(const Json& rows) {
  require(rows.is_array(), ErrorCode::InvalidArgument, "table must be an array");
  if (rows.empty()) return "";
  std::vector<std::string> cols;
  for (const auto& [k, v] : rows.front().items()) cols.push_back(k);
  std::string s;
  for (std::size_t c = 0; c < cols.size(); ++c) s += (c ? "," : "") + cols[c];
  s += '\n';
  for (const Json& row : rows) {
    for (std::size_t c = 0; c < cols.size(); ++c) s += (c ? "," : "") + scalar_cell(row.at(cols[c]));
    s += '\n';
  }
  return s;
}

Json table_from_csv(const std::string& csv) {
  Json rows = Json::array();
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) return rows;
  const auto cols = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    require(cells.size() == cols.size(), ErrorCode::InvalidArgument, "ragged table line '" + line + "'");
    Json row = Json::object();
    for (std::size_t c = 0; c < cols.size(); ++c) row[cols[c]] = parse_cell(cells[c]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string table_to_text(const Json& rows) {
  if (rows.empty()) return "";
  std::vector<std::string> cols;
  for (const auto& [k, v] : rows.front().items()) cols.push_back(k);
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) width[c] = cols[c].size();
  for (const Json& row : rows) {
    auto& line = cells.emplace_back();
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const Json& cell = row.at(cols[c]);
      std::string v = cell.is_string() ? cell.get<std::string>() : scalar_cell(cell);
      if (v.empty()) v = "-";
      width[c] = std::max(width[c], v.size());
      line.push_back(std::move(v));
    }
  }
  std::ostringstream s;
  auto emit = [&](const std::vector<std::string>& v) {
    for (std::size_t c = 0; c < v.size(); ++c) s << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << v[c];
    s << '\n';
  };
  emit(cols);
  for (const auto& line : cells) emit(line);
  return s.str();
}

Json strip_timing(Json report) {
  report.erase("timing");
  return report;
}

void write_report(const Json& report, const fs::path& file) { write_text(file, report.dump(2) + "\n"); }

Json read_report(const fs::path& file) {
  Json r = Json::parse(read_text(file));
  require(r.value("schema", "") == kReportSchema, ErrorCode::InvalidArgument, "unknown report schema");
  return r;
}

fs::path resolve_output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("RSS_OUTPUT_DIR"); env && *env) return env;
  return "rss-output";
}

// ---------------------------------------------------------------- json

Json to_json(const CavityConfig& c) {
  return {{"re", c.re},
          {"n", c.n},
          {"ly", c.ly},
          {"lid", to_string(c.lid)},
          {"scheme", to_string(c.scheme.kind)},
          {"extrapolate", c.scheme.extrapolate},
          {"tau", c.scheme.tau},
          {"dt", c.scheme.dt},
          {"eps", c.eps},
          {"t_max", c.t_max},
          {"wall_order", c.wall_order},
          {"poisson_tol", c.poisson_tol},
          {"nlrss_refresh", c.nlrss_refresh},
          {"krylov_tol", c.krylov_tol},
          {"blowup", c.blowup},
          {"max_steps", c.max_steps},
          {"history_stride", c.history_stride},
          {"convection", c.convection},
          {"coupled_extrapolation", c.coupled_extrapolation}};
}

namespace {

Json to_json(const VortexPoint& p) {
  return {{"label", p.label}, {"value", p.value}, {"psi", p.psi}, {"x", p.x}, {"y", p.y}, {"i", p.i}, {"j", p.j}};
}

Json to_json(const SchemeConfig& s) {
  return {{"scheme", to_string(s.kind)}, {"tau", s.tau}, {"theta", s.theta}, {"dt", s.dt},
          {"extrapolate", s.extrapolate}};
}

}  // namespace

Json to_json(const VortexReport& v) {
  Json sec = Json::array();
  for (const VortexPoint& p : v.secondary) sec.push_back(to_json(p));
  return {{"primary", to_json(v.primary)}, {"secondary", sec}};
}

// ---------------------------------------------------------------- poisson

Json cmd_poisson(const PoissonOptions& o, const fs::path& out) {
  require(o.dim == 2 || o.dim == 3, ErrorCode::InvalidArgument, "poisson dim must be 2 or 3");
  require(o.runs >= 1 && o.tol > 0, ErrorCode::InvalidArgument, "poisson needs runs >= 1 and tol > 0");
  Json r = base_report("poisson", {{"dim", o.dim},
                                   {"n", o.n},
                                   {"runs", o.runs},
                                   {"seed", o.seed},
                                   {"tol", o.tol},
                                   {"restart", o.restart},
                                   {"identity", o.identity}});
  const auto t0 = Clock::now();
  const Grid1D g1 = Grid1D::dirichlet(o.n);
  const Index size = o.dim == 2 ? o.n * o.n : o.n * o.n * o.n;
  LinearOperator a = LinearOperator::identity(size);
  SolveFn precond = identity_solver();
  if (!o.identity && o.dim == 2) {
    const auto d2 = build_compact_d2(g1);
    const Grid2D g{g1, g1};
    a = kron_sum_2d(d2, d2, g);
    precond = FastPoissonContext(g).solver();
  } else if (!o.identity) {
    const auto d2 = build_compact_d2(g1);
    const Grid3D g{g1, g1, g1};
    a = kron_sum_3d(d2, d2, d2, g);
    precond = FastPoissonContext(g).solver();
  }

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Json iters = Json::array(), resid = Json::array();
  int max_it = 0;
  bool all = true;
  for (int k = 0; k < o.runs; ++k) {
    const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(a.size(), [&] { return dist(rng); });
    Eigen::VectorXd x;
    const KrylovStats s = gmres(a, precond, b, x, {o.tol, o.restart, 100000, false});
    iters.push_back(s.iterations);
    resid.push_back(s.final_residual / b.norm());
    max_it = std::max(max_it, s.iterations);
    all = all && s.converged;
  }
  finish(r, all ? Outcome::Converged : Outcome::NotConverged,
         {{"unknowns", a.size()}, {"iterations", iters}, {"relative_residuals", resid}, {"max_iterations", max_it}},
         seconds_since(t0));
  save_outputs(out, r);
  return r;
}

// ---------------------------------------------------------------- heat

Json cmd_heat(const HeatOptions& o, const fs::path& out) {
  require(o.dim == 1 || o.dim == 2, ErrorCode::InvalidArgument, "heat dim must be 1 or 2");
  require(o.t_final > 0 && o.history_stride >= 1, ErrorCode::InvalidArgument, "heat needs t_final > 0, stride >= 1");
  o.scheme.validate();
  require(o.scheme.kind != SchemeKind::NLRSS, ErrorCode::InvalidArgument, "heat is linear; use rss");
  Json cfg = to_json(o.scheme);
  cfg["dim"] = o.dim;
  cfg["n"] = o.n;
  cfg["t_final"] = o.t_final;
  cfg["history_stride"] = o.history_stride;
  Json r = base_report("heat", cfg);
  const auto t0 = Clock::now();

  const HeatProblem p = o.dim == 1 ? make_heat_1d(o.n) : make_heat_2d(o.n);
  const double h = 1.0 / static_cast<double>(o.n + 1);
  const long steps = std::lround(o.t_final / o.scheme.dt);
  Eigen::VectorXd u = p.exact(0.0);
  std::vector<HistoryPoint> residual, error;
  double max_err = 0.0;
  Outcome outcome = Outcome::Converged;
  long k = 0;
  try {
    for (k = 1; k <= steps; ++k) {
      Eigen::VectorXd next = step(p.system, u, o.scheme);
      if (blown_up(next)) {
        outcome = Outcome::BlowUp;
        break;
      }
      const double t = static_cast<double>(k) * o.scheme.dt;
      const double res = (next - u).norm() / o.scheme.dt;
      u = std::move(next);
      const double err = (u - p.exact(t)).lpNorm<Eigen::Infinity>();
      max_err = std::max(max_err, err);
      if (k % o.history_stride == 0 || k == steps) {
        residual.push_back({t, res});
        error.push_back({t, err});
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SolveFailure && e.code() != ErrorCode::MaxIterationsExceeded) throw;
    outcome = Outcome::BlowUp;
  }
  const double t_end = static_cast<double>(std::min(k, steps)) * o.scheme.dt;
  Json res{{"steps", std::min(k, steps)},
           {"t_end", t_end},
           {"dt_forward_euler", p.dt_forward_euler},
           {"final_norm", number_or_null(u.norm())},
           {"final_error", error.empty() ? Json(nullptr) : Json(error.back().value)},
           {"max_error", number_or_null(max_err)}};
  finish(r, outcome, res, seconds_since(t0));
  if (!out.empty()) {
    save_outputs(out, r);
    write_history(out / "residual.csv", residual, "residual");
    write_history(out / "error.csv", error, "error");
    const Eigen::Map<const Eigen::MatrixXd> field(u.data(), o.n, o.dim == 1 ? 1 : o.n);
    write_field(out / "u.txt", field, h);
  }
  return r;
}

// ---------------------------------------------------------------- allen-cahn

Json cmd_allen_cahn(const AllenCahnOptions& o, const fs::path& out) {
  require(o.steps >= 1 && o.history_stride >= 1, ErrorCode::InvalidArgument, "allen-cahn needs steps, stride >= 1");
  Json r = base_report("allen-cahn", {{"n", o.n},
                                      {"epsilon", o.epsilon},
                                      {"lipschitz", o.lipschitz},
                                      {"tau", o.tau},
                                      {"dt", o.dt},
                                      {"extrapolate", o.extrapolate},
                                      {"steps", o.steps},
                                      {"seed", o.seed},
                                      {"amplitude", o.amplitude},
                                      {"history_stride", o.history_stride}});
  const auto t0 = Clock::now();
  const AllenCahnProblem p = make_allen_cahn(o.n, o.epsilon, o.lipschitz);
  // B = A: alpha = beta = 1, lambda_min(A) = 0 for Neumann data
  const double rho = spectral_radius(p.system.A);
  const StabilityReport bound = dtmax_allen_cahn(o.tau, 1.0, 0.0, rho, o.lipschitz, o.epsilon);
  double dt = o.dt;
  if (dt <= 0) {
    require(std::isfinite(bound.dt_max), ErrorCode::InvalidArgument, "unbounded dt_max: give dt explicitly");
    dt = 0.9 * bound.dt_max;
  }
  SchemeConfig cfg{SchemeKind::RSS, o.tau, 1.0, dt, o.extrapolate};

  const Eigen::VectorXd u0 = ac_initial_state(p.grid.size(), o.seed, o.amplitude);
  Outcome outcome = Outcome::Converged;
  EnergyRecord rec;
  try {
    rec = run_allen_cahn(p, u0, cfg, o.steps);
    if (!rec.state.allFinite()) outcome = Outcome::BlowUp;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SolveFailure) throw;
    outcome = Outcome::BlowUp;
  }
  Json res{{"dt", dt},
           {"dt_max", format_bound(bound.dt_max)},
           {"case", bound.case_label},
           {"within_bound", dt <= bound.dt_max},
           {"rho_a", rho}};
  if (outcome == Outcome::Converged) {
    res["max_energy_increase"] = rec.max_increase;
    res["energy_monotone"] = rec.max_increase <= 1e-10;
    res["initial_energy"] = rec.energy.front().value;
    res["final_energy"] = rec.energy.back().value;
    res["mean"] = rec.state.mean();
    res["min"] = rec.state.minCoeff();
    res["max"] = rec.state.maxCoeff();
  }
  finish(r, outcome, res, seconds_since(t0));
  if (!out.empty()) {
    save_outputs(out, r);
    std::vector<HistoryPoint> e;
    for (std::size_t k = 0; k < rec.energy.size(); k += static_cast<std::size_t>(o.history_stride))
      e.push_back(rec.energy[k]);
    if (!rec.energy.empty() && (rec.energy.size() - 1) % static_cast<std::size_t>(o.history_stride) != 0)
      e.push_back(rec.energy.back());
    write_history(out / "energy.csv", e, "energy");
    if (rec.state.size() == p.grid.size())
      write_field(out / "u.txt", Eigen::Map<const Eigen::MatrixXd>(rec.state.data(), o.n, o.n), p.grid.gx.h);
  }
  return r;
}

// ---------------------------------------------------------------- cavity

namespace {

Json cavity_results(const CavityResult& c) {
  return {{"label", outcome_label(c.outcome, c.tc)},
          {"tc", c.outcome == Outcome::Converged ? Json(c.tc) : Json(nullptr)},
          {"steps", c.steps},
          {"nt", c.outcome == Outcome::Converged ? Json(c.nt) : Json(nullptr)},
          {"poisson_iterations_max", c.poisson_iterations_max},
          {"poisson_iterations_mean", c.poisson_iterations_mean},
          {"vortices", c.state.psi.allFinite() ? cli::to_json(c.vortices) : Json(nullptr)}};
}

}  // namespace

Json cmd_cavity(const CavityConfig& c, const fs::path& out) {
  c.validate();
  Json r = base_report("cavity", to_json(c));
  CavitySolver solver(c);
  const CavityResult res = solver.run();
  finish(r, res.outcome, cavity_results(res), res.seconds);
  if (!out.empty()) {
    save_outputs(out, r);
    const double h = solver.operators().h();
    write_field(out / "omega.txt", res.state.omega, h);
    write_field(out / "psi.txt", res.state.psi, h);
    write_history(out / "residual.csv", res.history, "residual");
  }
  return r;
}

// ---------------------------------------------------------------- stability

Json cmd_stability(const StabilityOptions& o, const fs::path& out) {
  require(o.problem == "heat1d" || o.problem == "heat2d", ErrorCode::InvalidArgument,
          "stability problem must be heat1d or heat2d");
  Json r = base_report("stability", {{"problem", o.problem},
                                     {"n", o.n},
                                     {"tau_beta", o.tau_beta},
                                     {"tau", o.tau},
                                     {"steps", o.steps},
                                     {"seed", o.seed}});
  const auto t0 = Clock::now();
  const bool two = o.problem == "heat2d";
  const HeatProblem p = two ? make_heat_2d(o.n) : make_heat_1d(o.n);
  const Grid1D g1 = Grid1D::dirichlet(o.n);
  const FastPoissonContext ctx = two ? FastPoissonContext(Grid2D{g1, g1}) : FastPoissonContext(g1);
  const LinearOperator b = as_operator(p.system.B);
  const EquivalenceBounds eb = equivalence_bounds(p.system.A, b, ctx.solver());
  const double rho = spectral_radius(p.system.A);
  const double fe = 2.0 / rho;

  // nonsymmetric theorem inputs, dense for the sizes this command is meant for
  double delta = std::numeric_limits<double>::quiet_NaN(), lmin_b = delta, lmax_b = delta;
  if (p.system.size() <= 1024) {
    const Eigen::MatrixXd ad = p.system.A.to_dense();
    delta = (ad - ad.transpose()).jacobiSvd().singularValues()(0);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b.to_dense()).eigenvalues();
    lmin_b = ev.minCoeff();
    lmax_b = ev.maxCoeff();
  }

  std::vector<double> taus;
  for (double f : o.tau_beta) taus.push_back(f * eb.beta);
  taus.insert(taus.end(), o.tau.begin(), o.tau.end());

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const Eigen::VectorXd u0 = Eigen::VectorXd::NullaryExpr(p.system.size(), [&] { return dist(rng); });
  EmpiricalOptions eo;
  eo.steps = o.steps;

  Json rows = Json::array();
  bool all_ok = true;
  for (double tau : taus) {
    const StabilityReport lin = dtmax_linear(tau, eb.beta, rho);
    std::string nonsym = "n/a";
    if (std::isfinite(delta)) {
      try {
        nonsym = regime_label(dtmax_nonsymmetric(tau, eb.alpha, eb.beta, lmin_b, lmax_b, delta));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::HypothesisViolated) throw;
        nonsym = "hypothesis violated";
      }
    }
    SchemeConfig cfg{SchemeKind::RSS, tau, 1.0, fe};
    const double cap = 1e3 * fe;
    const double emp = empirical_dtmax(p.system, cfg, cap, u0, eo);
    const bool ok = emp >= std::min(lin.dt_max, cap) * (1 - 1e-12);
    all_ok = all_ok && ok;
    rows.push_back({{"tau", tau},
                    {"tau_over_beta", tau / eb.beta},
                    {"kappa", format_bound(stability_gain(tau, eb.beta))},
                    {"analytic", regime_label(lin)},
                    {"case", lin.case_label},
                    {"nonsymmetric", nonsym},
                    {"empirical", emp},
                    {"capped", emp >= cap},
                    {"empirical_ge_analytic", ok}});
  }
  Json res{{"alpha", eb.alpha},
           {"beta", eb.beta},
           {"rho_a", rho},
           {"dt_forward_euler", fe},
           {"tau_opt", tau_opt(p.system.A, b)},
           {"delta", number_or_null(delta)},
           {"all_empirical_ge_analytic", all_ok},
           {"table", rows}};
  finish(r, Outcome::Converged, res, seconds_since(t0));
  if (!out.empty()) {
    save_outputs(out, r);
    write_text(out / "stability.csv", table_to_csv(rows));
    write_text(out / "stability.txt", table_to_text(rows));
  }
  return r;
}

// ---------------------------------------------------------------- sweep

SweepRow parse_sweep_row(const std::string& s) {
  const auto parts = split(s, ':');
  require(parts.size() == 3, ErrorCode::InvalidArgument, "sweep row '" + s + "' is not tau:dt:scheme");
  SweepRow r;
  r.tau = parse_double(parts[0]);
  r.dt = parse_double(parts[1]);
  std::string k = parts[2];
  if (k.size() > 2 && k.compare(k.size() - 2, 2, "-x") == 0) {
    r.extrapolate = true;
    k.resize(k.size() - 2);
  }
  r.kind = scheme_from_string(k);
  require(r.kind == SchemeKind::RSS || r.kind == SchemeKind::NLRSS, ErrorCode::InvalidArgument,
          "sweep rows use rss or nlrss");
  return r;
}

std::string format_sweep_row(const SweepRow& r) {
  return format_double(r.tau) + ":" + format_double(r.dt) + ":" + to_string(r.kind) + (r.extrapolate ? "-x" : "");
}

namespace {

CavityConfig row_config(const CavityConfig& base, const SweepRow& row) {
  CavityConfig c = base;
  c.scheme.tau = row.tau;
  c.scheme.dt = row.dt;
  c.scheme.kind = row.kind;
  c.scheme.extrapolate = row.extrapolate;
  c.history_stride = 0;
  return c;
}

/// Largest dt with no blow-up over `steps` steps from the Stokes state.
double cavity_dtmax(CavityConfig c, const FlowState& init, long steps, double dt0) {
  const double w0 = init.omega.cwiseAbs().maxCoeff();
  c.eps = 1e-300;
  c.max_steps = steps;
  auto stable = [&](double dt) {
    c.scheme.dt = dt;
    c.t_max = static_cast<double>(steps + 1) * dt;
    CavitySolver s(c);
    const CavityResult r = s.run(init);
    return r.outcome != Outcome::BlowUp && r.state.omega.allFinite() &&
           r.state.omega.cwiseAbs().maxCoeff() <= 10.0 * w0;
  };
  double lo = dt0, hi = dt0;
  if (stable(dt0)) {
    hi = 2 * dt0;
    for (int k = 0; stable(hi); ++k) {
      if (k == 8) return hi;
      lo = hi;
      hi *= 2;
    }
  } else {
    lo = dt0 / 2;
    for (int k = 0; !stable(lo); ++k) {
      if (k == 12) return 0.0;
      hi = lo;
      lo /= 2;
    }
  }
  while (hi / lo > 1.02) {
    const double mid = std::sqrt(lo * hi);
    (stable(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

Json cmd_sweep(const SweepOptions& o, const fs::path& out) {
  require(o.jobs >= 1, ErrorCode::InvalidArgument, "jobs must be >= 1");
  Json cfg = to_json(o.base);
  for (const char* k : {"scheme", "extrapolate", "tau", "dt", "history_stride"}) cfg.erase(k);
  Json rows_in = Json::array();
  for (const SweepRow& row : o.rows) rows_in.push_back(format_sweep_row(row));
  cfg["rows"] = rows_in;
  cfg["jobs"] = o.jobs;
  cfg["bisect_dtmax"] = o.bisect_dtmax;
  cfg["bisect_steps"] = o.bisect_steps;
  Json r = base_report("sweep", cfg);
  const auto t0 = Clock::now();

  std::vector<CavityResult> results(o.rows.size());
  std::vector<double> dtmax(o.rows.size(), std::numeric_limits<double>::quiet_NaN());
  if (!o.rows.empty()) {
    for (const SweepRow& row : o.rows) row_config(o.base, row).validate();
    const FlowState init = CavitySolver(row_config(o.base, o.rows.front())).stokes_init();
    auto work = [&](std::size_t i) {
      const CavityConfig c = row_config(o.base, o.rows[i]);
      CavitySolver s(c);
      results[i] = s.run(init);
      if (o.bisect_dtmax) dtmax[i] = cavity_dtmax(c, init, o.bisect_steps, o.rows[i].dt);
    };
    const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(o.jobs), o.rows.size());
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < o.rows.size();) try {
            work(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  double ref_nt = std::numeric_limits<double>::quiet_NaN();
  for (const CavityResult& c : results)
    if (c.outcome == Outcome::Converged) {
      ref_nt = c.nt;
      break;
    }
  Json table = Json::array();
  for (std::size_t i = 0; i < o.rows.size(); ++i) {
    const CavityResult& c = results[i];
    const bool conv = c.outcome == Outcome::Converged;
    table.push_back({{"tau", o.rows[i].tau},
                     {"dt", o.rows[i].dt},
                     {"scheme", std::string(to_string(o.rows[i].kind)) + (o.rows[i].extrapolate ? "-x" : "")},
                     {"dt_max", number_or_null(dtmax[i])},
                     {"tc", conv ? Json(c.tc) : Json(nullptr)},
                     {"outcome", to_string(c.outcome)},
                     {"steps", c.steps},
                     {"nt", conv ? Json(c.nt) : Json(nullptr)},
                     {"factor", conv && std::isfinite(ref_nt) ? Json(ref_nt / c.nt) : Json(nullptr)}});
  }
  finish(r, Outcome::Converged, {{"table", table}}, seconds_since(t0));
  if (!out.empty()) {
    save_outputs(out, r);
    write_text(out / "sweep.csv", table_to_csv(table));
    write_text(out / "sweep.txt", table_to_text(table));
  }
  return r;
}

}  // namespace rss::cli
