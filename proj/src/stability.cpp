#include "rss/stability.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <random>

namespace rss {

std::string format_bound(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string regime_label(const StabilityReport& r) {
  return r.regime == Regime::Unconditional ? "Inc. Stab." : format_bound(r.dt_max);
}

double tau_opt(const LinearOperator& a, const LinearOperator& b, unsigned seed) {
  const Index n = a.size();
  require(b.size() == n, ErrorCode::DimensionMismatch, "tau_opt");
  double num = 0.0, den = 0.0;
  Eigen::VectorXd e, ae, be;
  if (n <= 4096) {
    e = Eigen::VectorXd::Zero(n);
    for (Index j = 0; j < n; ++j) {
      e[j] = 1.0;
      a.apply(e, ae);
      b.apply(e, be);
      num += be.dot(ae);
      den += be.squaredNorm();
      e[j] = 0.0;
    }
  } else {
    std::mt19937 rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (int k = 0; k < 64; ++k) {
      e = Eigen::VectorXd::NullaryExpr(n, [&] { return coin(rng) ? 1.0 : -1.0; });
      a.apply(e, ae);
      b.apply(e, be);
      num += be.dot(ae);
      den += be.squaredNorm();
    }
  }
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroPreconditioner, "B is zero");
  return num / den;
}

double tau_opt(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double den = b.squaredNorm();
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroPreconditioner, "B is zero");
  return (b.transpose() * a).trace() / den;
}

StabilityReport dtmax_linear(double tau, double beta, double rho_a) {
  require(beta > 0 && rho_a > 0 && tau >= 0, ErrorCode::InvalidArgument, "dtmax_linear inputs");
  StabilityReport r;
  r.tau = tau;
  r.beta = beta;
  r.rho_a = rho_a;
  if (tau >= beta / 2) {
    r.regime = Regime::Unconditional;
    r.dt_max = kInf;
    r.case_label = "tau >= beta/2";
  } else {
    r.regime = Regime::Conditional;
    r.dt_max = 2.0 / ((1.0 - 2.0 * tau / beta) * rho_a);
    r.case_label = "tau < beta/2";
  }
  return r;
}

double stability_gain(double tau, double beta) {
  require(beta > 0 && tau >= 0, ErrorCode::InvalidArgument, "stability_gain inputs");
  if (tau >= beta / 2) return kInf;
  const double k = 1.0 / (1.0 - 2.0 * tau / beta);
  return k > 1e12 ? kInf : k;
}

StabilityReport dtmax_nonsymmetric(double tau, double alpha, double beta, double lambda_min_b,
                                   double lambda_max_b, double delta) {
  require(alpha > 0 && beta > 0 && lambda_min_b > 0 && lambda_max_b >= lambda_min_b && delta >= 0 && tau >= 0,
          ErrorCode::InvalidArgument, "dtmax_nonsymmetric inputs");
  StabilityReport r;
  r.tau = tau;
  r.alpha = alpha;
  r.beta = beta;
  r.lambda_min_b = lambda_min_b;
  r.lambda_max_b = lambda_max_b;
  r.delta = delta;

  const double c = beta * beta / (2 * alpha);
  const double dmin = delta * delta / (8 * alpha * lambda_min_b * lambda_min_b);
  const double dmax = delta * delta / (8 * alpha * lambda_max_b * lambda_max_b);
  r.hypothesis_ok = c - dmin >= 0;
  if (!r.hypothesis_ok)
    throw Error(ErrorCode::HypothesisViolated,
                "beta^2/(2 alpha) - delta^2/(8 alpha lambda_min(B)^2) = " + format_bound(c - dmin) + " < 0");

  auto phi = [&](double xi) { return (beta * beta - 2 * alpha * tau) * xi + delta * delta / (4 * xi); };
  auto bound = [&](double p) { return p > 0 ? 2 * alpha / p : kInf; };

  if (tau >= c + dmin) {
    r.regime = Regime::Unconditional;
    r.dt_max = kInf;
    r.case_label = "i";
    return r;
  }
  if (c - dmin < tau && tau < c - dmax) {
    r.dt_max = bound(std::max(phi(lambda_min_b), phi(lambda_max_b)));
    r.case_label = "iv";
  } else if (tau <= c - dmax) {
    r.dt_max = bound(phi(lambda_max_b));
    r.case_label = "ii";
  } else {
    r.dt_max = bound(phi(lambda_min_b));
    r.case_label = "iii";
  }
  r.regime = std::isinf(r.dt_max) ? Regime::Unconditional : Regime::Conditional;
  return r;
}

StabilityReport dtmax_allen_cahn(double tau, double beta, double lambda_min_a, double rho_a, double lipschitz,
                                 double epsilon) {
  require(beta > 0 && rho_a > 0 && lambda_min_a >= 0 && lipschitz >= 0 && epsilon > 0 && tau >= 0,
          ErrorCode::InvalidArgument, "dtmax_allen_cahn inputs");
  StabilityReport r;
  r.tau = tau;
  r.beta = beta;
  r.lambda_min_a = lambda_min_a;
  r.rho_a = rho_a;
  r.lipschitz = lipschitz;
  r.epsilon = epsilon;
  const double nl = lipschitz / (2 * epsilon * epsilon);
  const double w = tau / beta - 0.5;
  if (tau >= beta / 2) {
    if (w * lambda_min_a - nl >= 0) {
      r.regime = Regime::Unconditional;
      r.dt_max = kInf;
      r.case_label = "1";
    } else {
      r.regime = Regime::Conditional;
      r.dt_max = 1.0 / (nl - w * lambda_min_a);
      r.case_label = "2";
    }
  } else {
    r.regime = Regime::Conditional;
    r.dt_max = 1.0 / (nl - w * rho_a);
    r.case_label = "3";
  }
  return r;
}

bool stable_run(const SemilinearProblem& p, const SchemeConfig& cfg, const Eigen::VectorXd& u0,
                const EmpiricalOptions& opts) {
  const double n0 = u0.norm();
  Eigen::VectorXd u = u0;
  try {
    for (int k = 0; k < opts.steps; ++k) {
      u = step(p, u, cfg);
      if (!u.allFinite()) return false;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SolveFailure || e.code() == ErrorCode::MaxIterationsExceeded) return false;
    throw;
  }
  return u.norm() <= opts.growth * n0;
}

double empirical_dtmax(const SemilinearProblem& p, const SchemeConfig& tmpl, double dt_hi,
                       const Eigen::VectorXd& u0, const EmpiricalOptions& opts) {
  require(dt_hi > opts.dt_lo, ErrorCode::InvalidArgument, "dt_hi must exceed dt_lo");
  SchemeConfig cfg = tmpl;
  auto ok = [&](double dt) {
    cfg.dt = dt;
    return stable_run(p, cfg, u0, opts);
  };
  if (!ok(opts.dt_lo)) throw Error(ErrorCode::AllUnstable, "unstable even at the smallest dt");
  if (ok(dt_hi)) return dt_hi;
  double lo = opts.dt_lo, hi = dt_hi;
  while (hi - lo > opts.rel_width * lo) {
    const double mid = std::sqrt(lo * hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace rss
