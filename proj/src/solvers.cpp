#include "rss/solvers.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace rss {

namespace {

const double kPi = 3.14159265358979323846;

Eigen::VectorXd sine_eigenvalues(const Grid1D& g) {
  require(g.bc == BoundaryCondition::Dirichlet, ErrorCode::InvalidArgument,
          "fast Poisson solver needs Dirichlet grids");
  Eigen::VectorXd l(g.n);
  for (Index k = 0; k < g.n; ++k) {
    const double s = std::sin(static_cast<double>(k + 1) * kPi * g.h / 2.0);
    l[k] = 4.0 / (g.h * g.h) * s * s;
  }
  return l;
}

Eigen::VectorXd random_vector(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  return Eigen::VectorXd::NullaryExpr(n, [&] { return unif(rng); });
}

// Applies f (acting on the columns of an (n_axis x m) matrix) along one axis
// of an x-fastest field.
template <typename F>
void along_axis(Eigen::VectorXd& v, const std::array<Index, 3>& n, int axis, F&& f) {
  const Index nx = n[0], ny = n[1], nz = n[2];
  if (axis == 0) {
    Eigen::Map<Eigen::MatrixXd> m(v.data(), nx, ny * nz);
    Eigen::MatrixXd t = m;
    f(t);
    m = t;
  } else if (axis == 1) {
    for (Index k = 0; k < nz; ++k) {
      Eigen::Map<Eigen::MatrixXd> slab(v.data() + k * nx * ny, nx, ny);
      Eigen::MatrixXd t = slab.transpose();
      f(t);
      slab = t.transpose();
    }
  } else {
    Eigen::Map<Eigen::MatrixXd> m(v.data(), nx * ny, nz);
    Eigen::MatrixXd t = m.transpose();
    f(t);
    m = t.transpose();
  }
}

}  // namespace

void dst1_columns(Eigen::MatrixXd& x) {
  const Index n = x.rows();
  const Index nfft = 2 * (n + 1);
  thread_local Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> in(nfft);
  std::vector<std::complex<double>> out(nfft / 2 + 1);
  for (Index c = 0; c < x.cols(); ++c) {
    in[0] = 0.0;
    in[n + 1] = 0.0;
    for (Index j = 0; j < n; ++j) {
      in[j + 1] = x(j, c);
      in[nfft - 1 - j] = -x(j, c);
    }
    fft.fwd(out.data(), in.data(), nfft);
    // FFT of the odd extension is -2i times the sine sum.
    for (Index k = 0; k < n; ++k) x(k, c) = -0.5 * out[k + 1].imag();
  }
}

FastPoissonContext::FastPoissonContext(const Grid1D& g) : dim_(1), size_(g.n) {
  n_[0] = g.n;
  h_[0] = g.h;
  lambda_[0] = sine_eigenvalues(g);
}

FastPoissonContext::FastPoissonContext(const Grid2D& g) : dim_(2), size_(g.size()) {
  n_ = {g.gx.n, g.gy.n, 1};
  h_ = {g.gx.h, g.gy.h, 1.0};
  lambda_[0] = sine_eigenvalues(g.gx);
  lambda_[1] = sine_eigenvalues(g.gy);
}

FastPoissonContext::FastPoissonContext(const Grid3D& g) : dim_(3), size_(g.size()) {
  n_ = {g.gx.n, g.gy.n, g.gz.n};
  h_ = {g.gx.h, g.gy.h, g.gz.h};
  lambda_[0] = sine_eigenvalues(g.gx);
  lambda_[1] = sine_eigenvalues(g.gy);
  lambda_[2] = sine_eigenvalues(g.gz);
}

void FastPoissonContext::transform(Eigen::VectorXd& v) const {
  for (int axis = 0; axis < dim_; ++axis) along_axis(v, n_, axis, [](Eigen::MatrixXd& m) { dst1_columns(m); });
}

void FastPoissonContext::solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x, double sigma) const {
  require(rhs.size() == size_, ErrorCode::DimensionMismatch, "fast Poisson solve");
  x = rhs;
  transform(x);
  // DST-I applied twice is (n+1)/2 times the identity.
  double scale = 1.0;
  for (int axis = 0; axis < dim_; ++axis) scale *= 2.0 / static_cast<double>(n_[axis] + 1);
  const Index nx = n_[0], ny = n_[1], nz = n_[2];
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j) {
      double base = sigma;
      if (dim_ > 1) base += lambda_[1][j];
      if (dim_ > 2) base += lambda_[2][k];
      for (Index i = 0; i < nx; ++i) x[i + nx * (j + ny * k)] *= scale / (base + lambda_[0][i]);
    }
  transform(x);
}

Eigen::VectorXd FastPoissonContext::solve(const Eigen::VectorXd& rhs, double sigma) const {
  Eigen::VectorXd x;
  solve(rhs, x, sigma);
  return x;
}

void FastPoissonContext::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y, double sigma) const {
  require(x.size() == size_, ErrorCode::DimensionMismatch, "fast Poisson apply");
  y = sigma * x;
  for (int axis = 0; axis < dim_; ++axis) {
    Eigen::VectorXd t = x;
    const double ih2 = 1.0 / (h_[axis] * h_[axis]);
    along_axis(t, n_, axis, [ih2](Eigen::MatrixXd& m) {
      const Index n = m.rows();
      Eigen::MatrixXd r = 2.0 * m;
      if (n > 1) {
        r.topRows(n - 1) -= m.bottomRows(n - 1);
        r.bottomRows(n - 1) -= m.topRows(n - 1);
      }
      m = ih2 * r;
    });
    y += t;
  }
}

LinearOperator FastPoissonContext::laplacian(double sigma) const {
  auto self = std::make_shared<const FastPoissonContext>(*this);
  auto f = [self, sigma](const Eigen::VectorXd& x, Eigen::VectorXd& y) { self->apply(x, y, sigma); };
  return {size_, f, f};
}

SolveFn FastPoissonContext::solver(double sigma) const {
  auto self = std::make_shared<const FastPoissonContext>(*this);
  return [self, sigma](const Eigen::VectorXd& x, Eigen::VectorXd& y) { self->solve(x, y, sigma); };
}

// ---------------------------------------------------------------------------

KrylovStats gmres(const LinearOperator& a, const SolveFn& precond, const Eigen::VectorXd& b,
                  Eigen::VectorXd& x, const GmresOptions& opts) {
  const Index n = a.size();
  require(b.size() == n, ErrorCode::DimensionMismatch, "gmres right-hand side");
  require(opts.restart > 0 && opts.tol > 0, ErrorCode::InvalidArgument, "gmres options");
  if (x.size() != n) x = Eigen::VectorXd::Zero(n);

  KrylovStats stats;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    stats.converged = true;
    return stats;
  }
  const double target = opts.tol * bnorm;
  const int m = opts.restart;

  Eigen::MatrixXd v(n, m + 1), z(n, m);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  Eigen::VectorXd cs(m), sn(m), g(m + 1), w, zj, r;

  a.apply(x, r);
  r = b - r;
  double beta = r.norm();
  stats.final_residual = beta;

  while (beta > target && stats.iterations < opts.max_iterations) {
    v.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    h.setZero();
    int k = 0;
    for (; k < m && stats.iterations < opts.max_iterations; ++k) {
      if (precond)
        precond(v.col(k), zj);
      else
        zj = v.col(k);
      z.col(k) = zj;
      a.apply(zj, w);
      for (int i = 0; i <= k; ++i) {
        h(i, k) = v.col(i).dot(w);
        w -= h(i, k) * v.col(i);
      }
      h(k + 1, k) = w.norm();
      const bool breakdown = h(k + 1, k) <= 1e-14 * h.col(k).head(k + 1).norm();
      if (!breakdown) v.col(k + 1) = w / h(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double rr = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = h(k, k) / rr;
      sn[k] = h(k + 1, k) / rr;
      h(k, k) = rr;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++stats.iterations;
      if (std::abs(g[k + 1]) <= target || breakdown) {
        ++k;
        break;
      }
    }
    const Eigen::VectorXd y =
        h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    x += z.leftCols(k) * y;
    a.apply(x, r);
    r = b - r;
    beta = r.norm();
    stats.final_residual = beta;
    if (!std::isfinite(beta)) break;
  }
  stats.converged = beta <= target;
  if (!stats.converged && opts.throw_on_failure)
    throw Error(ErrorCode::MaxIterationsExceeded,
                "gmres stopped at relative residual " + std::to_string(beta / bnorm));
  return stats;
}

SolveFn identity_solver() {
  return [](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = x; };
}

SolveFn dense_solver(const Eigen::MatrixXd& m) {
  auto lu = std::make_shared<const Eigen::PartialPivLU<Eigen::MatrixXd>>(m);
  return [lu](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = lu->solve(x); };
}

// ---------------------------------------------------------------------------

namespace {

// Dominant eigenvalue of the map `apply` by explicitly restarted Arnoldi.
double dominant_eigenvalue(Index n, const SolveFn& apply, const EigenOptions& opts) {
  const int m = static_cast<int>(std::min<Index>(n, opts.krylov_dim));
  Eigen::VectorXd start = random_vector(n, opts.seed);
  Eigen::MatrixXd v(n, m + 1);
  Eigen::VectorXd w;
  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
    v.col(0) = start.normalized();
    int k = 0;
    bool invariant = false;
    for (; k < m; ++k) {
      apply(v.col(k), w);
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= k; ++i) {
          const double c = v.col(i).dot(w);
          h(i, k) += c;
          w -= c * v.col(i);
        }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) <= 1e-13 * h.col(k).head(k + 1).norm()) {
        invariant = true;
        ++k;
        break;
      }
      v.col(k + 1) = w / h(k + 1, k);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(h.topLeftCorner(k, k));
    Index best = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&best);
    const std::complex<double> theta = es.eigenvalues()[best];
    Eigen::VectorXcd y = es.eigenvectors().col(best);
    y.normalize();
    const double resid = invariant ? 0.0 : h(k, k - 1) * std::abs(y[k - 1]);
    if (!std::isfinite(std::abs(theta)))
      throw Error(ErrorCode::NoConvergence, "eigenvalue iteration produced non-finite values");
    if (resid <= opts.tol * std::abs(theta)) return theta.real();
    Eigen::VectorXd next = v.leftCols(k) * y.real();
    if (next.norm() < 1e-3) next = v.leftCols(k) * y.imag();
    start = next;
  }
  throw Error(ErrorCode::NoConvergence, "eigenvalue iteration did not converge");
}

}  // namespace

double spectral_radius(const LinearOperator& a, const EigenOptions& opts) {
  return std::abs(dominant_eigenvalue(
      a.size(), [&a](const Eigen::VectorXd& x, Eigen::VectorXd& y) { a.apply(x, y); }, opts));
}

double min_eigen(const LinearOperator& a, const SolveFn& solve, const EigenOptions& opts) {
  const double mu = dominant_eigenvalue(a.size(), solve, opts);
  require(mu != 0.0, ErrorCode::NoConvergence, "inverse iteration returned zero");
  return 1.0 / mu;
}

EquivalenceBounds equivalence_bounds(const LinearOperator& a, const LinearOperator& b,
                                     const SolveFn& b_solve, double tol) {
  const Index n = a.size();
  require(b.size() == n, ErrorCode::DimensionMismatch, "equivalence bounds");
  require(a.has_transpose(), ErrorCode::InvalidArgument, "equivalence bounds need A^T");
  const LinearOperator s = symmetric_part(a);
  const int mmax = static_cast<int>(std::min<Index>(n, 600));

  std::vector<Eigen::VectorXd> q, bq;
  std::vector<double> alpha, beta;
  Eigen::VectorXd x = random_vector(n, 2024u), bx, sx, w;
  b.apply(x, bx);
  double nrm = std::sqrt(x.dot(bx));
  q.push_back(x / nrm);
  bq.push_back(bx / nrm);

  auto ritz = [&](int k, double& lo, double& hi, double& res_lo, double& res_hi) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    lo = es.eigenvalues()[0];
    hi = es.eigenvalues()[k - 1];
    const double bk = static_cast<int>(beta.size()) >= k ? beta[k - 1] : 0.0;
    res_lo = std::abs(bk * es.eigenvectors()(k - 1, 0));
    res_hi = std::abs(bk * es.eigenvectors()(k - 1, k - 1));
  };

  for (int j = 0; j < mmax; ++j) {
    s.apply(q[j], sx);
    alpha.push_back(sx.dot(q[j]));
    b_solve(sx, w);
    for (int pass = 0; pass < 2; ++pass)
      for (size_t i = 0; i < q.size(); ++i) w -= w.dot(bq[i]) * q[i];
    b.apply(w, bx);
    const double bnorm2 = w.dot(bx);
    const double bj = bnorm2 > 0 ? std::sqrt(bnorm2) : 0.0;
    const bool last = j + 1 == mmax || bj <= 1e-12 * std::abs(alpha[j]);
    beta.push_back(last && j + 1 == n ? 0.0 : bj);
    if (j + 1 == n || bj <= 1e-12 * std::abs(alpha[j])) {
      beta.back() = 0.0;
      double lo, hi, rl, rh;
      ritz(j + 1, lo, hi, rl, rh);
      return {lo, hi};
    }
    if ((j + 1) % 10 == 0 || last) {
      double lo, hi, rl, rh;
      ritz(j + 1, lo, hi, rl, rh);
      const double scale = std::max(std::abs(lo), std::abs(hi));
      if (rl <= tol * scale && rh <= tol * scale) return {lo, hi};
      if (last) break;
    }
    q.push_back(w / bj);
    bq.push_back(bx / bj);
  }
  throw Error(ErrorCode::NoConvergence, "Lanczos bounds did not converge");
}

}  // namespace rss
