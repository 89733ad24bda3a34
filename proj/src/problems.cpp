#include "rss/problems.hpp"

#include <Eigen/SparseCore>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rss/compact.hpp"

namespace rss {

namespace {

using std::numbers::pi;

Eigen::SparseMatrix<double> identity(Index n) {
  Eigen::SparseMatrix<double> id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

Eigen::VectorXd heat_manufactured(const Grid1D& grid, double t) {
  require(grid.bc == BoundaryCondition::Dirichlet, ErrorCode::InvalidArgument, "heat solution needs Dirichlet");
  const Eigen::VectorXd x = grid.nodes();
  return std::exp(-pi * pi * t) * (pi * x.array()).sin().matrix();
}

Eigen::VectorXd heat_manufactured(const Grid2D& grid, double t) {
  const Eigen::VectorXd sx = heat_manufactured(grid.gx, 0.0);
  const Eigen::VectorXd sy = heat_manufactured(grid.gy, 0.0);
  Eigen::VectorXd u(grid.size());
  for (Index j = 0; j < grid.gy.n; ++j) u.segment(j * grid.gx.n, grid.gx.n) = sy[j] * sx;
  return std::exp(-2 * pi * pi * t) * u;
}

HeatProblem make_heat_1d(Index n) {
  const Grid1D g = Grid1D::dirichlet(n);
  HeatProblem p;
  p.system.A = to_linear_operator(build_compact_d2(g));
  p.system.B = make_fast_stabilizer(FastPoissonContext(g));
  p.exact = [g](double t) { return heat_manufactured(g, t); };
  p.dt_forward_euler = 2.0 / spectral_radius(p.system.A);
  return p;
}

HeatProblem make_heat_2d(Index n) {
  const Grid1D g1 = Grid1D::dirichlet(n);
  const Grid2D g{g1, g1};
  const auto d2 = build_compact_d2(g1);
  HeatProblem p;
  p.system.A = kron_sum_2d(d2, d2, g);
  p.system.B = make_fast_stabilizer(FastPoissonContext(g));
  p.exact = [g](double t) { return heat_manufactured(g, t); };
  p.dt_forward_euler = 2.0 / spectral_radius(p.system.A);
  return p;
}

AllenCahnProblem make_allen_cahn(Index n, double epsilon, double lipschitz) {
  require(epsilon > 0, ErrorCode::InvalidArgument, "epsilon must be positive");
  require(lipschitz >= 0, ErrorCode::InvalidArgument, "Lipschitz bound must be non-negative");
  const Grid1D g1 = Grid1D::neumann(n);
  AllenCahnProblem p;
  p.epsilon = epsilon;
  p.lipschitz = lipschitz;
  p.grid = {g1, g1};

  const Eigen::SparseMatrix<double> a1 = build_fd2_d2(g1).matrix.to_sparse();
  const Eigen::SparseMatrix<double> a2 =
      Eigen::kroneckerProduct(identity(n), a1).eval() + Eigen::kroneckerProduct(a1, identity(n)).eval();
  p.a_banded = BandedMatrix<double>::from_sparse(a2);

  p.a_sparse = a2;
  p.system.A = LinearOperator::from_sparse(p.a_sparse);
  p.system.B = make_banded_stabilizer(p.a_banded);
  const double ie2 = 1.0 / (epsilon * epsilon);
  p.system.nonlinear = [ie2](const Eigen::VectorXd& u, Eigen::VectorXd& y) {
    y = ie2 * u.unaryExpr([](double v) { return ac_f(v); });
  };
  return p;
}

Eigen::VectorXd ac_residual(const AllenCahnProblem& p, const Eigen::VectorXd& u) {
  return p.system.residual(u);
}

double ac_energy(const AllenCahnProblem& p, const Eigen::VectorXd& u) {
  // <Au, u> as a sum of squared differences over the edges of A. Forming Au
  // first loses everything near the constant states, where each entry is a
  // difference of O(1/h^2) terms.
  using It = Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator;
  const auto& a = p.a_sparse;
  require(u.size() == a.rows(), ErrorCode::DimensionMismatch, "ac_energy");
  double grad = 0.0;
  for (Index i = 0; i < a.outerSize(); ++i) {
    double rowsum = 0.0;
    for (It it(a, i); it; ++it) {
      rowsum += it.value();
      const Index j = it.col();
      if (j > i) grad -= it.value() * (u[i] - u[j]) * (u[i] - u[j]);
    }
    grad += rowsum * u[i] * u[i];
  }
  double bulk = 0.0;
  for (Index i = 0; i < u.size(); ++i) bulk += ac_primitive(u[i]);
  return 0.5 * grad + bulk / (p.epsilon * p.epsilon);
}

Eigen::VectorXd shen_stabilized_step(const AllenCahnProblem& p, const Eigen::VectorXd& u, double s, double dt) {
  require(s >= 0 && dt > 0, ErrorCode::InvalidArgument, "shen step needs S >= 0, dt > 0");
  const double ie2 = 1.0 / (p.epsilon * p.epsilon);
  const double c = 1.0 + s * dt * ie2;
  // c u' + dt A u' = r  <=>  (Id + (dt/c) A) u' = r / c, and B = A here.
  const Eigen::VectorXd rhs = u - (dt * ie2 / c) * u.unaryExpr([](double v) { return ac_f(v); });
  Eigen::VectorXd next;
  p.system.B->solve(dt / c, rhs, next);
  if (!next.allFinite()) throw Error(ErrorCode::SolveFailure, "shen step produced non-finite values");
  return next;
}

Eigen::VectorXd ac_initial_state(Index size, unsigned seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  return Eigen::VectorXd::NullaryExpr(size, [&] { return amplitude * dist(rng); });
}

EnergyRecord run_allen_cahn(const AllenCahnProblem& p, const Eigen::VectorXd& u0, const SchemeConfig& cfg,
                            int steps) {
  cfg.validate();
  EnergyRecord rec;
  rec.state = u0;
  double e = ac_energy(p, u0);
  rec.energy.push_back({0.0, e});
  rec.max_increase = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= steps; ++k) {
    rec.state = step(p.system, rec.state, cfg);
    const double next = ac_energy(p, rec.state);
    rec.max_increase = std::max(rec.max_increase, next - e);
    e = next;
    rec.energy.push_back({k * cfg.dt, e});
  }
  return rec;
}

}  // namespace rss
