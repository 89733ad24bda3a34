#include "rss/timestep.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <sstream>

namespace rss {

const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::ForwardEuler: return "forward-euler";
    case SchemeKind::BackwardEuler: return "backward-euler";
    case SchemeKind::Theta: return "theta";
    case SchemeKind::RSS: return "rss";
    case SchemeKind::NLRSS: return "nlrss";
  }
  return "?";
}

SchemeKind scheme_from_string(const std::string& s) {
  for (SchemeKind k : {SchemeKind::ForwardEuler, SchemeKind::BackwardEuler, SchemeKind::Theta,
                       SchemeKind::RSS, SchemeKind::NLRSS})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown scheme '" + s + "'");
}

void SchemeConfig::validate() const {
  require(dt > 0.0, ErrorCode::InvalidArgument, "dt must be positive");
  require(tau >= 0.0, ErrorCode::InvalidArgument, "tau must be non-negative");
  require(theta >= 0.0 && theta <= 1.0, ErrorCode::InvalidArgument, "theta must lie in [0, 1]");
}

LinearOperator as_operator(StabilizerPtr b) {
  const Index n = b->size();
  return {n, [b](const Eigen::VectorXd& x, Eigen::VectorXd& y) { b->apply(x, y); }};
}

namespace {

class FastStabilizer final : public Stabilizer {
 public:
  FastStabilizer(const FastPoissonContext& ctx, double scale) : ctx_(ctx), scale_(scale) {}
  Index size() const override { return ctx_.size(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override {
    ctx_.apply(x, y);
    y *= scale_;
  }
  void solve(double s, const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const override {
    const double c = s * scale_;
    if (c == 0.0) {
      x = rhs;
      return;
    }
    // (Id + c A2) x = r  <=>  (1/c + A2) x = r / c
    ctx_.solve(rhs / c, x, 1.0 / c);
  }

 private:
  FastPoissonContext ctx_;
  double scale_;
};

// Small per-s cache of factorizations of (Id + s B).
template <typename Factor, typename Make>
class FactorCache {
 public:
  explicit FactorCache(Make make) : make_(std::move(make)) {}
  std::shared_ptr<const Factor> get(double s) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(s);
    if (it != cache_.end()) return it->second;
    if (cache_.size() >= 6) cache_.clear();
    auto f = std::make_shared<const Factor>(make_(s));
    cache_.emplace(s, f);
    return f;
  }

 private:
  Make make_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<const Factor>> cache_;
};

class BandedStabilizer final : public Stabilizer {
 public:
  explicit BandedStabilizer(BandedMatrix<double> b)
      : b_(std::move(b)), cache_([this](double s) { return BandedFactorization<double>(b_.shifted(1.0, s)); }) {}
  Index size() const override { return b_.rows(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override {
    y.resize(x.size());
    b_.apply(x, y);
  }
  void solve(double s, const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const override {
    x = cache_.get(s)->solve(rhs);
  }

 private:
  using Make = std::function<BandedFactorization<double>(double)>;
  BandedMatrix<double> b_;
  FactorCache<BandedFactorization<double>, Make> cache_;
};

class DiagonalStabilizer final : public Stabilizer {
 public:
  explicit DiagonalStabilizer(Eigen::VectorXd d) : d_(std::move(d)) {}
  Index size() const override { return d_.size(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y = d_.cwiseProduct(x); }
  void solve(double s, const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const override {
    x = rhs.array() / (1.0 + s * d_.array());
  }

 private:
  Eigen::VectorXd d_;
};

class DenseStabilizer final : public Stabilizer {
 public:
  explicit DenseStabilizer(Eigen::MatrixXd b)
      : b_(std::move(b)), cache_([this](double s) {
          return Eigen::PartialPivLU<Eigen::MatrixXd>(
              Eigen::MatrixXd::Identity(b_.rows(), b_.cols()) + s * b_);
        }) {}
  Index size() const override { return b_.rows(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y.noalias() = b_ * x; }
  void solve(double s, const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const override {
    x = cache_.get(s)->solve(rhs);
  }

 private:
  using Make = std::function<Eigen::PartialPivLU<Eigen::MatrixXd>(double)>;
  Eigen::MatrixXd b_;
  FactorCache<Eigen::PartialPivLU<Eigen::MatrixXd>, Make> cache_;
};

class KrylovStabilizer final : public Stabilizer {
 public:
  KrylovStabilizer(LinearOperator b, std::shared_ptr<const FastPoissonContext> ctx, double c, double tol)
      : b_(std::move(b)), ctx_(std::move(ctx)), c_(c), tol_(tol) {}
  Index size() const override { return b_.size(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { b_.apply(x, y); }
  void solve(double s, const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const override {
    if (s == 0.0) {
      x = rhs;
      return;
    }
    const LinearOperator k = combine(1.0, LinearOperator::identity(size()), s, b_);
    const double sc = s * c_;
    SolveFn pre;
    if (sc > 0.0) {
      auto ctx = ctx_;
      pre = [ctx, sc](const Eigen::VectorXd& r, Eigen::VectorXd& z) { ctx->solve(r / sc, z, 1.0 / sc); };
    }
    x = Eigen::VectorXd::Zero(size());
    const KrylovStats st = gmres(k, pre, rhs, x, {tol_, 30, 2000, false});
    if (!st.converged)
      throw Error(ErrorCode::SolveFailure, "stabilizer GMRES did not converge");
  }

 private:
  LinearOperator b_;
  std::shared_ptr<const FastPoissonContext> ctx_;
  double c_;
  double tol_;
};

class IdentityStabilizer final : public Stabilizer {
 public:
  explicit IdentityStabilizer(Index n) : n_(n) {}
  Index size() const override { return n_; }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y = x; }
  void solve(double s, const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const override { x = rhs / (1.0 + s); }

 private:
  Index n_;
};

}  // namespace

StabilizerPtr make_fast_stabilizer(const FastPoissonContext& ctx, double scale) {
  return std::make_shared<FastStabilizer>(ctx, scale);
}
StabilizerPtr make_banded_stabilizer(BandedMatrix<double> b) {
  return std::make_shared<BandedStabilizer>(std::move(b));
}
StabilizerPtr make_diagonal_stabilizer(Eigen::VectorXd d) {
  return std::make_shared<DiagonalStabilizer>(std::move(d));
}
StabilizerPtr make_identity_stabilizer(Index n) { return std::make_shared<IdentityStabilizer>(n); }
StabilizerPtr make_dense_stabilizer(Eigen::MatrixXd b) { return std::make_shared<DenseStabilizer>(std::move(b)); }
StabilizerPtr make_krylov_stabilizer(LinearOperator b, std::shared_ptr<const FastPoissonContext> ctx,
                                     double laplacian_scale, double tol) {
  return std::make_shared<KrylovStabilizer>(std::move(b), std::move(ctx), laplacian_scale, tol);
}

// ---------------------------------------------------------------------------

void SemilinearProblem::residual(const Eigen::VectorXd& u, Eigen::VectorXd& f) const {
  A.apply(u, f);
  if (nonlinear) {
    Eigen::VectorXd g;
    nonlinear(u, g);
    f += g;
  }
  if (forcing.size() > 0) f -= forcing;
}

Eigen::VectorXd SemilinearProblem::residual(const Eigen::VectorXd& u) const {
  Eigen::VectorXd f;
  residual(u, f);
  return f;
}

Eigen::VectorXd step_forward_euler(const SemilinearProblem& p, const Eigen::VectorXd& u, double dt) {
  return u - dt * p.residual(u);
}

namespace {

Eigen::VectorXd stabilized(const SemilinearProblem& p, const Stabilizer* b, const Eigen::VectorXd& u,
                           double tau, double dt) {
  Eigen::VectorXd r = -dt * p.residual(u);
  if (tau == 0.0) return u + r;
  require(b != nullptr, ErrorCode::InvalidArgument, "RSS step needs a stabilizer B");
  Eigen::VectorXd du;
  b->solve(tau * dt, r, du);
  return u + du;
}

}  // namespace

Eigen::VectorXd step_rss(const SemilinearProblem& p, const Eigen::VectorXd& u, const SchemeConfig& cfg) {
  return stabilized(p, p.B.get(), u, cfg.tau, cfg.dt);
}

Eigen::VectorXd step_nlrss(const SemilinearProblem& p, const Eigen::VectorXd& u, const SchemeConfig& cfg,
                           const Stabilizer& bk) {
  return stabilized(p, &bk, u, cfg.tau, cfg.dt);
}

Eigen::VectorXd step_extrapolated(const SemilinearProblem& p, const Eigen::VectorXd& u,
                                  const SchemeConfig& cfg, const Stabilizer* bk) {
  const Stabilizer* b = bk ? bk : p.B.get();
  const double half = 0.5 * cfg.dt;
  const Eigen::VectorXd u1 = stabilized(p, b, u, cfg.tau, half);
  const Eigen::VectorXd u2 = stabilized(p, b, u1, cfg.tau, half);
  const Eigen::VectorXd u3 = stabilized(p, b, u, cfg.tau, cfg.dt);
  return 2.0 * u2 - u3;
}

Eigen::VectorXd step_theta(const SemilinearProblem& p, const Eigen::VectorXd& u, double theta, double dt,
                           double tau, double tol) {
  require(p.linear(), ErrorCode::InvalidArgument, "theta scheme is implemented for linear problems");
  const Eigen::VectorXd r = -dt * p.residual(u);
  if (theta == 0.0) return u + r;
  const LinearOperator m = combine(1.0, LinearOperator::identity(p.size()), theta * dt, p.A);
  SolveFn pre;
  if (p.B && tau > 0.0) {
    const StabilizerPtr b = p.B;
    const double s = tau * theta * dt;
    pre = [b, s](const Eigen::VectorXd& x, Eigen::VectorXd& y) { b->solve(s, x, y); };
  }
  Eigen::VectorXd du = Eigen::VectorXd::Zero(p.size());
  const KrylovStats st = gmres(m, pre, r, du, {tol, 30, 5000, false});
  if (!st.converged) throw Error(ErrorCode::SolveFailure, "implicit step GMRES did not converge");
  return u + du;
}

Eigen::VectorXd step_backward_euler_linear(const SemilinearProblem& p, const Eigen::VectorXd& u, double dt,
                                           double tau, double tol) {
  return step_theta(p, u, 1.0, dt, tau, tol);
}

Eigen::VectorXd step(const SemilinearProblem& p, const Eigen::VectorXd& u, const SchemeConfig& cfg) {
  switch (cfg.kind) {
    case SchemeKind::ForwardEuler:
      return step_forward_euler(p, u, cfg.dt);
    case SchemeKind::BackwardEuler:
      return step_theta(p, u, 1.0, cfg.dt, cfg.tau);
    case SchemeKind::Theta:
      return step_theta(p, u, cfg.theta, cfg.dt, cfg.tau);
    case SchemeKind::RSS:
      return cfg.extrapolate ? step_extrapolated(p, u, cfg) : step_rss(p, u, cfg);
    case SchemeKind::NLRSS: {
      require(static_cast<bool>(p.refresh), ErrorCode::InvalidArgument, "NLRSS needs a refresh callback");
      const StabilizerPtr bk = p.refresh(u);
      return cfg.extrapolate ? step_extrapolated(p, u, cfg, bk.get()) : step_nlrss(p, u, cfg, *bk);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scheme");
}

int solves_per_step(const SchemeConfig& cfg) {
  const bool rss_like = cfg.kind == SchemeKind::RSS || cfg.kind == SchemeKind::NLRSS;
  return rss_like && cfg.extrapolate ? 3 : 1;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Converged: return "converged";
    case Outcome::NotConverged: return "NC";
    case Outcome::BlowUp: return "***";
  }
  return "?";
}

std::string outcome_label(Outcome o, double tc) {
  if (o != Outcome::Converged) return to_string(o);
  std::ostringstream s;
  s.precision(6);
  s << tc;
  return s.str();
}

bool blown_up(const Eigen::VectorXd& u, double threshold) {
  if (!u.allFinite()) return true;
  return u.size() > 0 && u.cwiseAbs().maxCoeff() > threshold;
}

SteadyStateReport run_to_steady(const SemilinearProblem& p, const Eigen::VectorXd& u0,
                                const SchemeConfig& cfg, const SteadyOptions& opts) {
  cfg.validate();
  require(opts.eps > 0.0 && opts.t_max > 0.0, ErrorCode::InvalidArgument, "steady-state options");
  SteadyStateReport rep;
  Eigen::VectorXd u = u0;
  const long cap = static_cast<long>(std::ceil(opts.t_max / cfg.dt - 1e-9));
  for (long k = 0; k < cap && (opts.max_steps < 0 || k < opts.max_steps); ++k) {
    Eigen::VectorXd next;
    try {
      next = step(p, u, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SolveFailure && e.code() != ErrorCode::MaxIterationsExceeded) throw;
      rep.outcome = Outcome::BlowUp;
      rep.steps = k + 1;
      rep.state = u;
      return rep;
    }
    const double t = static_cast<double>(k + 1) * cfg.dt;
    const double res = (next - u).norm() / cfg.dt;
    u.swap(next);
    rep.steps = k + 1;
    if (opts.history_stride > 0 && (k % opts.history_stride == 0)) rep.residual_history.push_back({t, res});
    if (blown_up(u, opts.blowup) || !std::isfinite(res)) {
      rep.outcome = Outcome::BlowUp;
      rep.state = u;
      return rep;
    }
    if (res < opts.eps) {
      if (opts.history_stride > 0 && (k % opts.history_stride != 0)) rep.residual_history.push_back({t, res});
      rep.outcome = Outcome::Converged;
      rep.tc = t;
      rep.state = u;
      return rep;
    }
  }
  rep.outcome = Outcome::NotConverged;
  rep.state = u;
  return rep;
}

}  // namespace rss
