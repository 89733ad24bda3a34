#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <numbers>
#include <random>

#include "rss/cavity.hpp"

using namespace rss;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::numbers::pi;

namespace {

MatrixXd random_field(Index nx, Index ny, unsigned seed, double amp = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-amp, amp);
  return MatrixXd::NullaryExpr(nx, ny, [&] { return d(rng); });
}

template <typename F>
MatrixXd sample(const Grid2D& g, F f) {
  MatrixXd m(g.gx.n, g.gy.n);
  for (Index j = 0; j < g.gy.n; ++j)
    for (Index i = 0; i < g.gx.n; ++i) m(i, j) = f(g.gx.node(i), g.gy.node(j));
  return m;
}

Grid2D square(Index n) {
  const Grid1D g = Grid1D::dirichlet(n);
  return {g, g};
}

CavityConfig config(Index n, double re, double tau, double dt) {
  CavityConfig c;
  c.n = n;
  c.re = re;
  c.scheme.tau = tau;
  c.scheme.dt = dt;
  c.history_stride = 0;
  return c;
}

VectorXd vec(const MatrixXd& m) { return Eigen::Map<const VectorXd>(m.data(), m.size()); }

}  // namespace

TEST_CASE("second-order wall closures as printed") {
  const double h = 0.125;
  const Index n = 7;
  SUBCASE("zero data") {
    const WallValues w = wall_vorticity_order2(MatrixXd::Zero(n, n), VectorXd::Zero(n), h);
    CHECK(w.bottom.isZero(0));
    CHECK(w.top.isZero(0));
    CHECK(w.left.isZero(0));
    CHECK(w.right.isZero(0));
  }
  SUBCASE("lid term") {
    const WallValues w = wall_vorticity_order2(MatrixXd::Zero(n, n), VectorXd::Ones(n), h);
    CHECK((w.top.array() == -3.0 / h).all());
    CHECK(w.bottom.isZero(0));
    CHECK(w.left.isZero(0));
    CHECK(w.right.isZero(0));
  }
  SUBCASE("integer fixture") {
    // psi(i, j) = i + 10 j on 0-based interior indices; h = 1/8 makes every
    // value below exactly representable.
    MatrixXd psi(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) psi(i, j) = static_cast<double>(i + 10 * j);
    const VectorXd g = VectorXd::LinSpaced(n, 1, 7);
    const WallValues w = wall_vorticity_order2(psi, g, h);
    for (Index i = 0; i < n; ++i) {
      CHECK(w.bottom[i] == 32.0 * (psi(i, 0) - 8 * psi(i, 1)));
      CHECK(w.top[i] == 32.0 * (-psi(i, 5) + 8 * psi(i, 6) - 0.75 * g[i]));
    }
    for (Index j = 0; j < n; ++j) {
      CHECK(w.left[j] == 32.0 * (psi(0, j) - 8 * psi(1, j)));
      CHECK(w.right[j] == 32.0 * (-psi(5, j) + 8 * psi(6, j)));
    }
  }
}

TEST_CASE("fourth-order wall closures") {
  const double h = 0.125;
  const Index n = 7;
  CHECK_THROWS_AS(wall_vorticity_order4(MatrixXd::Zero(3, 3), VectorXd::Zero(3), 0.25), Error);

  const WallValues z = wall_vorticity_order4(MatrixXd::Zero(n, n), VectorXd::Zero(n), h);
  CHECK(z.top.isZero(0));
  const WallValues w = wall_vorticity_order4(MatrixXd::Zero(n, n), VectorXd::Ones(n), h);
  CHECK((w.top.array() == -25.0 / (6.0 * h)).all());
  CHECK(w.bottom.isZero(0));
  CHECK(w.left.isZero(0));
  CHECK(w.right.isZero(0));

  SUBCASE("integer fixture") {
    MatrixXd psi(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) psi(i, j) = static_cast<double>(9 * 8 * (i + 3 * j * j));
    const VectorXd g = VectorXd::LinSpaced(n, -3, 3);
    const WallValues v = wall_vorticity_order4(psi, g, h);
    for (Index i = 0; i < n; ++i) {
      const double b = 64.0 * (8 * psi(i, 0) - 3 * psi(i, 1) + 8.0 / 9.0 * psi(i, 2) - psi(i, 3) / 8);
      const double t = 64.0 * (8 * psi(i, 6) - 3 * psi(i, 5) + 8.0 / 9.0 * psi(i, 4) - psi(i, 3) / 8) -
                       25.0 / 0.75 * g[i];
      CHECK(v.bottom[i] == doctest::Approx(b).epsilon(1e-15));
      CHECK(v.top[i] == doctest::Approx(t).epsilon(1e-15));
    }
  }

  SUBCASE("manufactured stream function") {
    // psi = sin^2(pi x) y^2 (y - 1): zero on the walls, u = psi_y = sin^2(pi x)
    // on the lid, no slip elsewhere. Wall vorticity psi_yy or psi_xx.
    auto errors = [](Index n) {
      const Grid2D g = square(n);
      const double h = g.gx.h;
      const MatrixXd psi = sample(g, [](double x, double y) { return std::pow(std::sin(pi * x), 2) * y * y * (y - 1); });
      VectorXd lid(n), bottom(n), top(n), side(n);
      for (Index i = 0; i < n; ++i) {
        const double s2 = std::pow(std::sin(pi * g.gx.node(i)), 2);
        lid[i] = -s2;  // closures take minus the lid velocity
        bottom[i] = -2 * s2;
        top[i] = 4 * s2;
        const double y = g.gy.node(i);
        side[i] = 2 * pi * pi * y * y * (y - 1);
      }
      const WallValues w = wall_vorticity_order4(psi, lid, h);
      return std::array<double, 3>{(w.bottom - bottom).lpNorm<Eigen::Infinity>(),
                                   (w.top - top).lpNorm<Eigen::Infinity>(),
                                   std::max((w.left - side).lpNorm<Eigen::Infinity>(),
                                            (w.right - side).lpNorm<Eigen::Infinity>())};
    };
    const auto e1 = errors(31), e2 = errors(63);
    // cubic in y: the closure is exact up to rounding
    CHECK(e1[0] < 1e-9);
    CHECK(e1[1] < 1e-9);
    const double ratio = e1[2] / e2[2];
    CHECK(ratio >= 14.0);
    CHECK(ratio <= 18.0);
  }
}

TEST_CASE("convective term") {
  const CavityOperators ops(square(15));
  const Index n = 15;

  SUBCASE("constant vorticity") {
    const MatrixXd psi = random_field(n, n, 1u);
    WallValues w = WallValues::zero(ops.grid());
    for (VectorXd* v : {&w.bottom, &w.top, &w.left, &w.right}) v->setConstant(2.5);
    CHECK(ops.convective_term(psi, MatrixXd::Constant(n, n, 2.5), w).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  SUBCASE("J(a, a) = 0") {
    for (unsigned s = 0; s < 100; ++s) {
      const MatrixXd a = random_field(n, n, s);
      CHECK(ops.convective_term(a, a).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }

  SUBCASE("manufactured fields") {
    auto error = [](Index n) {
      const Grid2D g = square(n);
      const CavityOperators o(g);
      const MatrixXd psi = sample(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
      auto om = [](double x, double y) { return std::cos(pi * x) * std::cos(2 * pi * y); };
      const MatrixXd omega = sample(g, om);
      WallValues w = WallValues::zero(g);
      for (Index i = 0; i < n; ++i) {
        const double t = g.gx.node(i);
        w.bottom[i] = om(t, 0);
        w.top[i] = om(t, 1);
        w.left[i] = om(0, t);
        w.right[i] = om(1, t);
      }
      const MatrixXd exact = sample(g, [](double x, double y) {
        const double px = pi * std::cos(pi * x) * std::sin(pi * y), py = pi * std::sin(pi * x) * std::cos(pi * y);
        const double ox = -pi * std::sin(pi * x) * std::cos(2 * pi * y);
        const double oy = -2 * pi * std::cos(pi * x) * std::sin(2 * pi * y);
        return py * ox - px * oy;
      });
      return (o.convective_term(psi, omega, w) - exact).lpNorm<Eigen::Infinity>();
    };
    const double ratio = error(31) / error(63);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
  }
}

TEST_CASE("stream function Poisson solve") {
  const Grid2D g = square(31);
  const CavityOperators ops(g);
  MatrixXd psi = MatrixXd::Ones(31, 31);
  CHECK(ops.poisson_solve_psi(MatrixXd::Zero(31, 31), psi).iterations == 0);
  CHECK(psi.isZero(0));

  const MatrixXd exact = sample(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
  const MatrixXd omega = -2 * pi * pi * exact;
  psi.setZero();
  const KrylovStats st = ops.poisson_solve_psi(omega, psi, 1e-12);
  CHECK(st.converged);
  // discrete residual at the requested tolerance, error at the h^4 level
  CHECK((ops.a4() * vec(psi) + vec(omega)).norm() <= 1e-11 * vec(omega).norm());
  CHECK((psi - exact).lpNorm<Eigen::Infinity>() < 2e-5);
}

TEST_CASE("NLRSS preconditioner") {
  const Index n = 8;
  const Grid2D g = square(n);
  const CavityOperators ops(g);
  const double re = 250;
  const auto b0 = ops.nlrss_preconditioner(MatrixXd::Zero(n, n), re);
  CHECK((MatrixXd(b0) - MatrixXd(ops.a2_sparse()) / re).norm() == 0.0);

  // dense oracle built node by node
  const MatrixXd psi = random_field(n, n, 17u);
  const double h = g.gx.h;
  auto at = [&](Index i, Index j) { return (i < 0 || j < 0 || i >= n || j >= n) ? 0.0 : psi(i, j); };
  MatrixXd dense = MatrixXd::Zero(n * n, n * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const Index r = i + n * j;
      const double u = (at(i, j + 1) - at(i, j - 1)) / (2 * h);
      const double v = (at(i + 1, j) - at(i - 1, j)) / (2 * h);
      dense(r, r) += 4 / (h * h * re);
      if (i > 0) dense(r, r - 1) += -1 / (h * h * re) - u / (2 * h);
      if (i + 1 < n) dense(r, r + 1) += -1 / (h * h * re) + u / (2 * h);
      if (j > 0) dense(r, r - n) += -1 / (h * h * re) + v / (2 * h);
      if (j + 1 < n) dense(r, r + n) += -1 / (h * h * re) - v / (2 * h);
    }
  const auto bk = ops.nlrss_preconditioner(psi, re);
  CHECK((MatrixXd(bk) - dense).norm() <= 1e-12 * dense.norm());
}

TEST_CASE("vortex location") {
  const Grid2D g = square(9);
  const MatrixXd psi = sample(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
  const VortexReport r = locate_vortices(psi, g);
  CHECK(r.primary.x == doctest::Approx(0.5));
  CHECK(r.primary.y == doctest::Approx(0.5));
  CHECK(r.primary.value == doctest::Approx(1.0));
  CHECK(r.secondary.empty());

  const VortexReport neg = locate_vortices(-psi, g);
  CHECK(neg.primary.value == doctest::Approx(1.0));
  CHECK(neg.primary.psi == doctest::Approx(-1.0));

  // an opposite-signed bump near a corner is reported as secondary
  MatrixXd two = -psi;
  two(8, 0) = 1e-3;
  const VortexReport s = locate_vortices(two, g);
  REQUIRE(s.secondary.size() == 1);
  CHECK(s.secondary[0].label == "BR");
  CHECK(s.secondary[0].psi == 1e-3);
}

TEST_CASE("Stokes initialization") {
  SUBCASE("lid at rest gives the zero state") {
    CavityConfig c = config(15, 100, 1, 0.01);
    c.lid = Lid::None;
    const FlowState s = CavitySolver(c).stokes_init();
    CHECK(s.psi.isZero(0));
    CHECK(s.omega.isZero(0));
  }
  SUBCASE("single vortex, fixed point, independent of Re") {
    CavitySolver a(config(31, 100, 1, 0.01)), b(config(31, 1000, 1, 0.01));
    const FlowState sa = a.stokes_init(), sb = b.stokes_init();
    CHECK((sa.psi - sb.psi).norm() == 0.0);
    const VortexReport r = locate_vortices(sa.psi, a.operators().grid());
    CHECK(r.primary.psi < 0);
    CHECK(r.primary.x == doctest::Approx(0.5));
    CHECK(r.primary.y > 0.7);

    // restarting the Stokes iteration from its own result stops at once
    CavityConfig c = config(31, 1, 10, 4.0 / (32 * 32));
    c.convection = false;
    c.eps = 1e-8;
    CavitySolver again(c);
    const CavityResult rr = again.run(sa);
    CHECK(rr.outcome == Outcome::Converged);
    CHECK(rr.steps <= 2);
  }
}

TEST_CASE("cavity step") {
  SUBCASE("zero state without lid stays zero") {
    CavityConfig c = config(15, 100, 1, 0.01);
    c.lid = Lid::None;
    CavitySolver s(c);
    FlowState st = FlowState::zero(c.grid());
    s.step(st);
    CHECK(st.psi.isZero(0));
    CHECK(st.omega.isZero(0));
  }

  SUBCASE("psi and omega stay compatible") {
    CavitySolver s(config(31, 100, 1, 0.01));
    FlowState st = s.stokes_init();
    for (int k = 0; k < 20; ++k) {
      s.step(st);
      CHECK((s.operators().a4() * vec(st.psi) + vec(st.omega)).norm() <= 10 * 1e-12 * vec(st.omega).norm());
    }
  }

  SUBCASE("matches a dense reference on N = 8") {
    const Index n = 8;
    const double re = 100, tau = 1, dt = 0.01;
    CavitySolver solver(config(n, re, tau, dt));
    const Grid2D g = solver.operators().grid();
    const double h = g.gx.h;

    FlowState st;
    st.psi = random_field(n, n, 3u, 0.01);
    st.omega = random_field(n, n, 4u, 1.0);
    st.walls = WallValues::zero(g);

    // 1D dense pieces and their boundary columns
    auto pieces = [&](const CompactOperator<double>& op) {
      const MatrixXd pinv = op.p_dense().inverse();
      VectorXd l = VectorXd::Zero(n), r = VectorXd::Zero(n);
      l[0] = op.q_rows().scale * op.q_rows().left_boundary;
      r[n - 1] = op.q_rows().scale * op.q_rows().right_boundary;
      return std::array<MatrixXd, 3>{pinv * op.q_dense(), pinv * l, pinv * r};
    };
    const auto d2 = pieces(build_compact_d2(g.gx));
    const auto d1 = pieces(build_compact_d1(g.gx));
    const MatrixXd id = MatrixXd::Identity(n, n);
    const MatrixXd a4 = Eigen::kroneckerProduct(id, d2[0]).eval() + Eigen::kroneckerProduct(d2[0], id).eval();
    const MatrixXd dx = Eigen::kroneckerProduct(id, d1[0]), dy = Eigen::kroneckerProduct(d1[0], id);
    auto xwall = [&](const std::array<MatrixXd, 3>& d, const VectorXd& left, const VectorXd& right) -> VectorXd {
      return Eigen::kroneckerProduct(left, d[1]).eval() + Eigen::kroneckerProduct(right, d[2]).eval();
    };
    auto ywall = [&](const std::array<MatrixXd, 3>& d, const VectorXd& bottom, const VectorXd& top) -> VectorXd {
      return Eigen::kroneckerProduct(d[1], bottom).eval() + Eigen::kroneckerProduct(d[2], top).eval();
    };

    // fourth-order walls with the lid moving towards +x
    const MatrixXd& p = st.psi;
    WallValues w;
    w.bottom = (8 * p.col(0) - 3 * p.col(1) + 8.0 / 9 * p.col(2) - p.col(3) / 8) / (h * h);
    w.top = (8 * p.col(7) - 3 * p.col(6) + 8.0 / 9 * p.col(5) - p.col(4) / 8) / (h * h) +
            VectorXd::Constant(n, 25.0 / (6 * h));
    w.left = ((8 * p.row(0) - 3 * p.row(1) + 8.0 / 9 * p.row(2) - p.row(3) / 8) / (h * h)).transpose();
    w.right = ((8 * p.row(7) - 3 * p.row(6) + 8.0 / 9 * p.row(5) - p.row(4) / 8) / (h * h)).transpose();

    const VectorXd om = vec(st.omega), ps = vec(st.psi);
    const VectorXd diff = a4 * om + xwall(d2, w.left, w.right) + ywall(d2, w.bottom, w.top);
    const VectorXd om_x = dx * om + xwall(d1, w.left, w.right);
    const VectorXd om_y = dy * om + ywall(d1, w.bottom, w.top);
    const VectorXd conv = (dy * ps).cwiseProduct(om_x) - (dx * ps).cwiseProduct(om_y);
    const VectorXd f = diff / re + conv;
    const MatrixXd a2 = MatrixXd(solver.operators().a2_sparse());
    const VectorXd om_next = om - (MatrixXd::Identity(n * n, n * n) + tau * dt / re * a2).lu().solve(dt * f);
    const VectorXd ps_next = -a4.lu().solve(om_next);

    solver.step(st);
    CHECK((vec(st.omega) - om_next).norm() <= 1e-10 * om_next.norm());
    CHECK((vec(st.psi) - ps_next).norm() <= 1e-10 * ps_next.norm());
  }
}

TEST_CASE("Stokes walls are a fixed point") {
  CavitySolver s(config(31, 100, 1, 0.01));
  const FlowState st = s.stokes_init();
  const WallValues w = s.walls(st.psi);
  const double d = std::max({(w.bottom - st.walls.bottom).lpNorm<Eigen::Infinity>(),
                             (w.top - st.walls.top).lpNorm<Eigen::Infinity>(),
                             (w.left - st.walls.left).lpNorm<Eigen::Infinity>(),
                             (w.right - st.walls.right).lpNorm<Eigen::Infinity>()});
  CHECK(d == 0.0);
  // one more Stokes step moves the walls by less than 1e-8
  CavityConfig c = config(31, 1, 10, 4.0 / (32 * 32));
  c.convection = false;
  CavitySolver stokes(c);
  FlowState next = st;
  stokes.step(next);
  const WallValues w2 = stokes.walls(next.psi);
  CHECK((w2.top - w.top).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((w2.bottom - w.bottom).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((w2.left - w.left).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((w2.right - w.right).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("steady state does not depend on tau") {
  // Re = 100, N = 63, eps = 1e-5
  const std::array<std::pair<double, double>, 3> runs{{{1.0, 0.01}, {10.0, 0.02}, {30.0, 0.3}}};
  CavitySolver first(config(63, 100, 1, 0.01));
  const FlowState init = first.stokes_init();
  std::vector<MatrixXd> psi;
  for (const auto& [tau, dt] : runs) {
    CavityConfig c = config(63, 100, tau, dt);
    c.eps = 1e-5;
    c.history_stride = 1;
    CavitySolver s(c);
    const CavityResult r = s.run(init);
    REQUIRE(r.outcome == Outcome::Converged);
    psi.push_back(r.state.psi);
    if (tau == 1.0) {
      // monotone decay once the start-up transient (t < 2) is over
      int rises = 0;
      for (std::size_t k = 1; k < r.history.size(); ++k)
        if (r.history[k].t > 2.0 && r.history[k].value > r.history[k - 1].value) ++rises;
      CHECK(rises == 0);
    }
  }
  for (std::size_t a = 0; a < psi.size(); ++a)
    for (std::size_t b = a + 1; b < psi.size(); ++b) CHECK((psi[a] - psi[b]).norm() < 10 * 1e-5);
}
