#pragma once

#include <Eigen/Core>

#include <limits>
#include <string>

#include "rss/linear_operator.hpp"
#include "rss/timestep.hpp"

namespace rss {

enum class Regime { Unconditional, Conditional };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Analytic bound with the inputs that produced it. Inputs a theorem does
/// not use are NaN.
struct StabilityReport {
  Regime regime = Regime::Conditional;
  double dt_max = kInf;
  std::string case_label;
  bool hypothesis_ok = true;

  double tau = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  double rho_a = std::numeric_limits<double>::quiet_NaN();
  double lambda_min_a = std::numeric_limits<double>::quiet_NaN();
  double lambda_min_b = std::numeric_limits<double>::quiet_NaN();
  double lambda_max_b = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();
  double lipschitz = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
};

/// "inf" for unbounded values, shortest round-trip decimal otherwise.
std::string format_bound(double v);
/// Table label: "Inc. Stab." when unconditional, else the numeric bound.
std::string regime_label(const StabilityReport& r);

/// trace(B^T A) / ||B||_F^2. Exact column sweep for n <= 4096, Hutchinson
/// estimate with 64 Rademacher probes above.
double tau_opt(const LinearOperator& a, const LinearOperator& b, unsigned seed = 1234u);
double tau_opt(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

StabilityReport dtmax_linear(double tau, double beta, double rho_a);

/// 1 / (1 - 2 tau / beta); infinity for tau >= beta/2 or above 1e12.
double stability_gain(double tau, double beta);

/// Nonsymmetric A with delta = ||A - A^T||. Branches are tried in the order
/// i, iv, ii, iii so that the overlap of the printed ranges of ii and iv is
/// resolved by the endpoint maximum of the convex function Phi.
StabilityReport dtmax_nonsymmetric(double tau, double alpha, double beta, double lambda_min_b,
                                   double lambda_max_b, double delta);

StabilityReport dtmax_allen_cahn(double tau, double beta, double lambda_min_a, double rho_a, double lipschitz,
                                 double epsilon);

struct EmpiricalOptions {
  int steps = 500;
  double rel_width = 1e-2;
  double dt_lo = 1e-6;
  double growth = 1e3;  ///< unstable if ||u_end|| > growth ||u_0||
};

/// True when `steps` steps of the scheme stay finite and bounded.
bool stable_run(const SemilinearProblem& p, const SchemeConfig& cfg, const Eigen::VectorXd& u0,
                const EmpiricalOptions& opts = {});

/// Geometric bisection on dt between stable and unstable runs; returns the
/// largest stable dt found, or dt_hi when no instability shows up.
double empirical_dtmax(const SemilinearProblem& p, const SchemeConfig& tmpl, double dt_hi,
                       const Eigen::VectorXd& u0, const EmpiricalOptions& opts = {});

}  // namespace rss
