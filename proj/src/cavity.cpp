#include "rss/cavity.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace rss {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

Eigen::Map<const Vector> flat(const Matrix& m) { return {m.data(), m.size()}; }

Matrix unflat(const Vector& v, Index nx, Index ny) { return Eigen::Map<const Matrix>(v.data(), nx, ny); }

Eigen::SparseMatrix<double> sparse_identity(Index n) {
  Eigen::SparseMatrix<double> id(n, n);
  id.setIdentity();
  return id;
}

// Centred (-1, 0, 1) / (2h) with zero data outside the grid.
Eigen::SparseMatrix<double> centred_d1(Index n, double h) {
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < n; ++i) {
    if (i > 0) t.emplace_back(i, i - 1, -0.5 / h);
    if (i + 1 < n) t.emplace_back(i, i + 1, 0.5 / h);
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

void check_walls(const Matrix& psi, const Vector& g) {
  require(psi.rows() >= 4 && psi.cols() >= 4, ErrorCode::GridTooSmall, "wall closures need 4 points per side");
  require(g.size() == psi.rows(), ErrorCode::DimensionMismatch, "lid data");
}

}  // namespace

const char* to_string(Lid lid) {
  switch (lid) {
    case Lid::A: return "A";
    case Lid::B: return "B";
    case Lid::None: return "none";
  }
  return "?";
}

Lid lid_from_string(const std::string& s) {
  if (s == "A" || s == "a") return Lid::A;
  if (s == "B" || s == "b") return Lid::B;
  if (s == "none") return Lid::None;
  throw Error(ErrorCode::InvalidArgument, "unknown lid '" + s + "'");
}

double lid_velocity(Lid lid, double x) {
  if (lid == Lid::None) return 0.0;
  if (lid == Lid::A) return 1.0;
  const double s = 1.0 - (1.0 - 2.0 * x) * (1.0 - 2.0 * x);
  return s * s;
}

Grid2D CavityConfig::grid() const {
  const Grid1D gx = Grid1D::dirichlet(n);
  const Index ny = ly == 1.0 ? n : 2 * n + 1;
  return {gx, Grid1D::dirichlet(ny, ly)};
}

void CavityConfig::validate() const {
  scheme.validate();
  require(re > 0, ErrorCode::InvalidArgument, "Re must be positive");
  require(n >= 5, ErrorCode::GridTooSmall, "cavity needs n >= 5");
  require(ly == 1.0 || ly == 2.0, ErrorCode::InvalidArgument, "ly must be 1 or 2");
  require(eps > 0, ErrorCode::InvalidArgument, "eps must be positive");
  require(t_max > 0, ErrorCode::InvalidArgument, "t_max must be positive");
  require(wall_order == 2 || wall_order == 4, ErrorCode::InvalidArgument, "wall order must be 2 or 4");
  require(poisson_tol > 0, ErrorCode::InvalidArgument, "poisson tolerance must be positive");
  require(nlrss_refresh >= 1, ErrorCode::InvalidArgument, "refresh stride must be >= 1");
  require(scheme.kind == SchemeKind::RSS || scheme.kind == SchemeKind::NLRSS, ErrorCode::InvalidArgument,
          "cavity runs support rss and nlrss");
}

WallValues WallValues::zero(const Grid2D& g) {
  return {Vector::Zero(g.gx.n), Vector::Zero(g.gx.n), Vector::Zero(g.gy.n), Vector::Zero(g.gy.n)};
}

FlowState FlowState::zero(const Grid2D& g) {
  return {Matrix::Zero(g.gx.n, g.gy.n), Matrix::Zero(g.gx.n, g.gy.n), WallValues::zero(g)};
}

WallValues wall_vorticity_order2(const Matrix& psi, const Vector& g, double h) {
  check_walls(psi, g);
  const Index nx = psi.rows(), ny = psi.cols();
  const double c = 1.0 / (2 * h * h);
  WallValues w;
  w.bottom = c * (psi.col(0) - 8 * psi.col(1));
  w.top = c * (-psi.col(ny - 2) + 8 * psi.col(ny - 1) - 6 * h * g);
  w.left = c * (psi.row(0) - 8 * psi.row(1)).transpose();
  w.right = c * (-psi.row(nx - 2) + 8 * psi.row(nx - 1)).transpose();
  return w;
}

WallValues wall_vorticity_order4(const Matrix& psi, const Vector& g, double h) {
  check_walls(psi, g);
  const Index nx = psi.rows(), ny = psi.cols();
  const double ih2 = 1.0 / (h * h);
  auto closure = [&](const auto& p1, const auto& p2, const auto& p3, const auto& p4) -> Vector {
    return ih2 * (8 * p1 - 3 * p2 + (8.0 / 9.0) * p3 - 0.125 * p4);
  };
  WallValues w;
  w.bottom = closure(psi.col(0), psi.col(1), psi.col(2), psi.col(3));
  w.top = closure(psi.col(ny - 1), psi.col(ny - 2), psi.col(ny - 3), psi.col(ny - 4)) - (25.0 / (6.0 * h)) * g;
  w.left = closure(psi.row(0), psi.row(1), psi.row(2), psi.row(3)).transpose();
  w.right = closure(psi.row(nx - 1), psi.row(nx - 2), psi.row(nx - 3), psi.row(nx - 4)).transpose();
  return w;
}

// ---------------------------------------------------------------------------

CavityOperators::CavityOperators(const Grid2D& g)
    : grid_(g),
      d2x_(build_compact_d2(g.gx)),
      d2y_(build_compact_d2(g.gy)),
      d1x_(build_compact_d1(g.gx)),
      d1y_(build_compact_d1(g.gy)),
      fast_(std::make_shared<const FastPoissonContext>(g)),
      a4_(kron_sum_2d(d2x_, d2y_, g)) {
  require(std::abs(g.gx.h - g.gy.h) <= 1e-14 * g.gx.h, ErrorCode::InvalidArgument, "cavity cells must be square");
  const Index nx = g.gx.n, ny = g.gy.n;
  const auto ix = sparse_identity(nx), iy = sparse_identity(ny);
  const Eigen::SparseMatrix<double> lx = build_fd2_d2(g.gx).matrix.to_sparse();
  const Eigen::SparseMatrix<double> ly = build_fd2_d2(g.gy).matrix.to_sparse();
  a2_ = Eigen::SparseMatrix<double>(Eigen::kroneckerProduct(iy, lx).eval() + Eigen::kroneckerProduct(ly, ix).eval());
  cdx_ = Eigen::SparseMatrix<double>(Eigen::kroneckerProduct(iy, centred_d1(nx, g.gx.h)).eval());
  cdy_ = Eigen::SparseMatrix<double>(Eigen::kroneckerProduct(centred_d1(ny, g.gy.h), ix).eval());
}

Matrix CavityOperators::negative_laplacian(const Matrix& u, const WallValues& w) const {
  Matrix vx, vy;
  d2x_.apply_cols(u, vx, w.left.transpose(), w.right.transpose());
  d2y_.apply_cols(u.transpose(), vy, w.bottom.transpose(), w.top.transpose());
  vx += vy.transpose();
  return vx;
}

Matrix CavityOperators::dx(const Matrix& u, const Vector& left, const Vector& right) const {
  Matrix v;
  d1x_.apply_cols(u, v, left.transpose(), right.transpose());
  return v;
}

Matrix CavityOperators::dy(const Matrix& u, const Vector& bottom, const Vector& top) const {
  Matrix v;
  d1y_.apply_cols(u.transpose(), v, bottom.transpose(), top.transpose());
  return v.transpose();
}

Matrix CavityOperators::convective_term(const Matrix& psi, const Matrix& omega, const WallValues& w) const {
  const Vector zx = Vector::Zero(grid_.gx.n), zy = Vector::Zero(grid_.gy.n);
  const Matrix psi_x = dx(psi, zy, zy), psi_y = dy(psi, zx, zx);
  const Matrix om_x = dx(omega, w.left, w.right), om_y = dy(omega, w.bottom, w.top);
  return psi_y.cwiseProduct(om_x) - psi_x.cwiseProduct(om_y);
}

Matrix CavityOperators::convective_term(const Matrix& psi, const Matrix& omega) const {
  return convective_term(psi, omega, WallValues::zero(grid_));
}

KrylovStats CavityOperators::poisson_solve_psi(const Matrix& omega, Matrix& psi, double tol) const {
  require(tol > 0, ErrorCode::InvalidArgument, "poisson tolerance must be positive");
  const Index nx = grid_.gx.n, ny = grid_.gy.n;
  if (psi.rows() != nx || psi.cols() != ny) psi = Matrix::Zero(nx, ny);
  const Vector b = -flat(omega);
  if (b.norm() == 0.0) {
    psi.setZero();
    return {0, 0.0, true};
  }
  Vector x = flat(psi);
  GmresOptions opts;
  opts.tol = tol;
  const KrylovStats st = gmres(a4_, fast_->solver(), b, x, opts);
  psi = unflat(x, nx, ny);
  return st;
}

RowSparse CavityOperators::nlrss_preconditioner(const Matrix& psi, double re) const {
  require(re > 0, ErrorCode::InvalidArgument, "Re must be positive");
  const Vector p = flat(psi);
  const Vector u = cdy_ * p;  // velocity along x
  const Vector v = cdx_ * p;
  RowSparse b = (1.0 / re) * a2_;
  b += RowSparse(u.asDiagonal() * cdx_);
  b -= RowSparse(v.asDiagonal() * cdy_);
  b.makeCompressed();
  return b;
}

// ---------------------------------------------------------------------------

VortexReport locate_vortices(const Matrix& psi, const Grid2D& g, double threshold) {
  require(psi.rows() == g.gx.n && psi.cols() == g.gy.n, ErrorCode::DimensionMismatch, "locate_vortices");
  const Index nx = psi.rows(), ny = psi.cols();
  auto point = [&](Index i, Index j, double sign, std::string label) {
    return VortexPoint{std::move(label), sign * psi(i, j), psi(i, j), g.gx.node(i), g.gy.node(j), i, j};
  };

  Index pi = 0, pj = 0;
  psi.cwiseAbs().maxCoeff(&pi, &pj);
  const double sign = psi(pi, pj) < 0 ? -1.0 : 1.0;
  VortexReport rep;
  rep.primary = point(pi, pj, sign, "primary");

  const double ly = g.gy.h * static_cast<double>(ny + 1);
  auto at = [&](Index i, Index j) { return (i < 0 || j < 0 || i >= nx || j >= ny) ? 0.0 : psi(i, j); };
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      // opposite sign to the primary vortex, as a local extremum
      const double s = -sign * psi(i, j);
      if (!(s > threshold)) continue;
      bool extremum = true;
      for (Index dj = -1; dj <= 1 && extremum; ++dj)
        for (Index di = -1; di <= 1; ++di)
          if ((di || dj) && -sign * at(i + di, j + dj) >= s) {
            extremum = false;
            break;
          }
      if (!extremum) continue;
      std::string label;
      const double x = g.gx.node(i), y = g.gy.node(j);
      if (ly > 1.5) {
        label = y > ly / 2 ? "VS" : "VI";
      } else {
        label = std::string(y < 0.5 ? "B" : "T") + (x < 0.5 ? "L" : "R");
      }
      rep.secondary.push_back(point(i, j, sign, label));
    }
  std::sort(rep.secondary.begin(), rep.secondary.end(),
            [](const VortexPoint& a, const VortexPoint& b) { return std::abs(a.psi) > std::abs(b.psi); });
  return rep;
}

// ---------------------------------------------------------------------------

CavitySolver::CavitySolver(CavityConfig cfg) : CavitySolver(cfg, std::make_shared<CavityOperators>(cfg.grid())) {}

CavitySolver::CavitySolver(CavityConfig cfg, std::shared_ptr<const CavityOperators> ops)
    : cfg_(std::move(cfg)), ops_(std::move(ops)) {
  cfg_.validate();
  const Grid2D g = cfg_.grid();
  require(ops_->grid().gx.n == g.gx.n && ops_->grid().gy.n == g.gy.n, ErrorCode::DimensionMismatch,
          "operators built for another grid");
  lid_.resize(g.gx.n);
  // The closures are written for a lid velocity of -g; the sign flip gives
  // a lid moving towards +x.
  for (Index i = 0; i < g.gx.n; ++i) lid_[i] = -lid_velocity(cfg_.lid, g.gx.node(i));
  b_rss_ = make_fast_stabilizer(*ops_->fast(), 1.0 / cfg_.re);
}

WallValues CavitySolver::walls(const Matrix& psi) const {
  return cfg_.wall_order == 4 ? wall_vorticity_order4(psi, lid_, ops_->h())
                              : wall_vorticity_order2(psi, lid_, ops_->h());
}

SemilinearProblem CavitySolver::transport_problem(const FlowState& s, bool convection) const {
  const Index nx = ops_->grid().gx.n, ny = ops_->grid().gy.n;
  const double nu = 1.0 / cfg_.re;
  auto ops = ops_;
  SemilinearProblem p;
  p.A = LinearOperator(nx * ny, [ops, nu](const Vector& x, Vector& y) {
    ops->a4().apply(x, y);
    y *= nu;
  });
  p.B = b_rss_;
  // Wall vorticity enters the diffusion as known data.
  const Matrix wall_part = ops_->negative_laplacian(Matrix::Zero(nx, ny), s.walls);
  p.forcing = -nu * flat(wall_part);
  if (convection) {
    auto psi = std::make_shared<const Matrix>(s.psi);
    auto w = std::make_shared<const WallValues>(s.walls);
    p.nonlinear = [ops, psi, w, nx, ny](const Vector& x, Vector& y) {
      y = flat(ops->convective_term(*psi, unflat(x, nx, ny), *w));
    };
  }
  return p;
}

StabilizerPtr CavitySolver::refreshed_bk(const Matrix& psi) {
  if (!b_k_ || steps_since_refresh_ >= cfg_.nlrss_refresh) {
    auto bk = std::make_shared<const RowSparse>(ops_->nlrss_preconditioner(psi, cfg_.re));
    LinearOperator bop(bk->rows(), [bk](const Vector& x, Vector& y) { y.noalias() = *bk * x; });
    b_k_ = make_krylov_stabilizer(std::move(bop), ops_->fast(), 1.0 / cfg_.re, cfg_.krylov_tol);
    steps_since_refresh_ = 0;
  }
  ++steps_since_refresh_;
  return b_k_;
}

KrylovStats CavitySolver::advance(FlowState& s, const SchemeConfig& scheme, const StabilizerPtr& bk) const {
  s.walls = walls(s.psi);
  SemilinearProblem p = transport_problem(s, cfg_.convection);
  if (bk) p.refresh = [bk](const Vector&) { return bk; };
  const Index nx = s.omega.rows(), ny = s.omega.cols();
  s.omega = unflat(rss::step(p, Vector(flat(s.omega)), scheme), nx, ny);
  return ops_->poisson_solve_psi(s.omega, s.psi, cfg_.poisson_tol);
}

KrylovStats CavitySolver::step(FlowState& s) {
  const StabilizerPtr bk = cfg_.scheme.kind == SchemeKind::NLRSS ? refreshed_bk(s.psi) : nullptr;
  if (!(cfg_.scheme.extrapolate && cfg_.coupled_extrapolation)) return advance(s, cfg_.scheme, bk);

  // Richardson combination of whole outer steps, walls updated in between.
  SchemeConfig full = cfg_.scheme;
  full.extrapolate = false;
  SchemeConfig half = full;
  half.dt = full.dt / 2;
  FlowState a = s, b = s;
  KrylovStats st = advance(a, half, bk);
  const KrylovStats st2 = advance(a, half, bk);
  const KrylovStats st3 = advance(b, full, bk);
  st.iterations = std::max({st.iterations, st2.iterations, st3.iterations});
  s.omega = 2 * a.omega - b.omega;
  s.psi = 2 * a.psi - b.psi;
  s.walls = walls(s.psi);
  return st;
}

FlowState CavitySolver::stokes_init(double dt, double tau, double eps, long max_steps) const {
  if (dt <= 0.0) dt = 4.0 * ops_->h() * ops_->h();
  CavityConfig c = cfg_;
  c.re = 1.0;
  c.convection = false;
  c.scheme = SchemeConfig{};
  c.scheme.kind = SchemeKind::RSS;
  c.scheme.tau = tau;
  c.scheme.dt = dt;
  c.eps = eps;
  c.max_steps = max_steps;
  c.t_max = static_cast<double>(max_steps + 1) * dt;
  c.history_stride = 0;
  CavitySolver stokes(c, ops_);
  const CavityResult r = stokes.run(FlowState::zero(ops_->grid()));
  if (r.outcome != Outcome::Converged)
    throw Error(ErrorCode::NotConverged, "Stokes initialization did not converge");
  FlowState s = r.state;
  s.walls = walls(s.psi);
  return s;
}

CavityResult CavitySolver::run(const Observer& observer) { return run(stokes_init(), observer); }

CavityResult CavitySolver::run(const FlowState& initial, const Observer& observer) {
  const auto start = std::chrono::steady_clock::now();
  CavityResult r;
  r.state = initial;
  b_k_.reset();
  steps_since_refresh_ = 0;
  const double dt = cfg_.scheme.dt;
  const long cap = static_cast<long>(std::ceil(cfg_.t_max / dt - 1e-9));
  long poisson_total = 0;
  r.outcome = Outcome::NotConverged;
  for (long k = 0; k < cap && (cfg_.max_steps < 0 || k < cfg_.max_steps); ++k) {
    const Matrix prev = r.state.psi;
    try {
      const KrylovStats st = step(r.state);
      poisson_total += st.iterations;
      r.poisson_iterations_max = std::max(r.poisson_iterations_max, st.iterations);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SolveFailure && e.code() != ErrorCode::MaxIterationsExceeded) throw;
      r.outcome = Outcome::BlowUp;
      r.steps = k + 1;
      break;
    }
    r.steps = k + 1;
    const double t = static_cast<double>(k + 1) * dt;
    const double res = (r.state.psi - prev).norm() / dt;
    const bool last = res < cfg_.eps;
    if (cfg_.history_stride > 0 && (k % cfg_.history_stride == 0 || last)) r.history.push_back({t, res});
    if (observer) observer(k + 1, t, res);
    if (!std::isfinite(res) || blown_up(flat(r.state.omega), cfg_.blowup) ||
        blown_up(flat(r.state.psi), cfg_.blowup)) {
      r.outcome = Outcome::BlowUp;
      break;
    }
    if (last) {
      r.outcome = Outcome::Converged;
      r.tc = t;
      break;
    }
  }
  if (r.outcome == Outcome::Converged) r.nt = static_cast<double>(r.steps * solves_per_step(cfg_.scheme));
  r.poisson_iterations_mean = r.steps > 0 ? static_cast<double>(poisson_total) / static_cast<double>(r.steps) : 0.0;
  if (r.state.psi.allFinite()) r.vortices = locate_vortices(r.state.psi, ops_->grid());
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace rss
