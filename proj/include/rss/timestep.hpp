#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rss/banded.hpp"
#include "rss/linear_operator.hpp"
#include "rss/solvers.hpp"

namespace rss {

enum class SchemeKind { ForwardEuler, BackwardEuler, Theta, RSS, NLRSS };
enum class PreconditionerKind { SecondOrder, DiagonalOfA, Identity };

const char* to_string(SchemeKind k);
SchemeKind scheme_from_string(const std::string& s);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::RSS;
  double tau = 1.0;
  double theta = 1.0;
  double dt = 1e-3;
  bool extrapolate = false;
  PreconditionerKind preconditioner = PreconditionerKind::SecondOrder;

  void validate() const;
};

/// Owns B and solves (Id + s B) x = r for any s >= 0.
class Stabilizer {
 public:
  virtual ~Stabilizer() = default;
  virtual Index size() const = 0;
  virtual void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const = 0;
  virtual void solve(double s, const Eigen::VectorXd& rhs, Eigen::VectorXd& x) const = 0;
};

using StabilizerPtr = std::shared_ptr<const Stabilizer>;

/// B itself as a LinearOperator (shares ownership).
LinearOperator as_operator(StabilizerPtr b);

/// B = scale * A2 (Dirichlet 2nd-order Laplacian), sine-transform solves.
StabilizerPtr make_fast_stabilizer(const FastPoissonContext& ctx, double scale = 1.0);
/// Banded B; the factorization of (Id + s B) is cached per s.
StabilizerPtr make_banded_stabilizer(BandedMatrix<double> b);
StabilizerPtr make_diagonal_stabilizer(Eigen::VectorXd d);
StabilizerPtr make_identity_stabilizer(Index n);
/// Dense B with cached LU per s; for small problems and oracles.
StabilizerPtr make_dense_stabilizer(Eigen::MatrixXd b);
/// Matrix-free B_k solved by GMRES, preconditioned by (Id + s c A2)^{-1}.
StabilizerPtr make_krylov_stabilizer(LinearOperator b, std::shared_ptr<const FastPoissonContext> ctx,
                                     double laplacian_scale, double tol = 1e-8);

/// du/dt + F(u) = 0 with F(u) = A u + f_nl(u) - f.
struct SemilinearProblem {
  LinearOperator A;
  StabilizerPtr B;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> nonlinear;  ///< optional
  Eigen::VectorXd forcing;                                                  ///< empty means 0
  /// Optional state-dependent stabilizer B_k used by NLRSS.
  std::function<StabilizerPtr(const Eigen::VectorXd&)> refresh;

  Index size() const { return A.size(); }
  bool linear() const { return !nonlinear; }
  void residual(const Eigen::VectorXd& u, Eigen::VectorXd& f) const;
  Eigen::VectorXd residual(const Eigen::VectorXd& u) const;
};

Eigen::VectorXd step_forward_euler(const SemilinearProblem& p, const Eigen::VectorXd& u, double dt);
/// (Id + tau dt B) du = -dt F(u).
Eigen::VectorXd step_rss(const SemilinearProblem& p, const Eigen::VectorXd& u, const SchemeConfig& cfg);
/// Same step with a caller-supplied B_k.
Eigen::VectorXd step_nlrss(const SemilinearProblem& p, const Eigen::VectorXd& u, const SchemeConfig& cfg,
                           const Stabilizer& bk);
/// Two chained half steps and one full step, combined as 2 u2 - u3.
Eigen::VectorXd step_extrapolated(const SemilinearProblem& p, const Eigen::VectorXd& u,
                                  const SchemeConfig& cfg, const Stabilizer* bk = nullptr);
/// (Id + theta dt A) du = -dt F(u) for linear problems, by GMRES with
/// K = Id + tau dt B as preconditioner.
Eigen::VectorXd step_theta(const SemilinearProblem& p, const Eigen::VectorXd& u, double theta, double dt,
                           double tau = 1.0, double tol = 1e-13);
Eigen::VectorXd step_backward_euler_linear(const SemilinearProblem& p, const Eigen::VectorXd& u, double dt,
                                           double tau = 1.0, double tol = 1e-13);
/// Dispatches on cfg.kind / cfg.extrapolate.
Eigen::VectorXd step(const SemilinearProblem& p, const Eigen::VectorXd& u, const SchemeConfig& cfg);

/// Solves per configured step; 3 for the extrapolated variants.
int solves_per_step(const SchemeConfig& cfg);

enum class Outcome { Converged, NotConverged, BlowUp };
const char* to_string(Outcome o);
/// Table label: T_c as text, "NC" or "***".
std::string outcome_label(Outcome o, double tc);

struct HistoryPoint {
  double t = 0.0;
  double value = 0.0;
};

struct SteadyStateReport {
  Outcome outcome = Outcome::NotConverged;
  double tc = 0.0;
  long steps = 0;
  std::vector<HistoryPoint> residual_history;
  Eigen::VectorXd state;
};

struct SteadyOptions {
  double eps = 1e-5;
  double t_max = 2000.0;
  double blowup = 1e10;
  long max_steps = -1;     ///< < 0: unlimited
  int history_stride = 1;  ///< record every k-th residual
};

bool blown_up(const Eigen::VectorXd& u, double threshold = 1e10);

/// Iterates until ||(u^{k+1} - u^k)/dt|| < eps (Euclidean, raw coefficients).
SteadyStateReport run_to_steady(const SemilinearProblem& p, const Eigen::VectorXd& u0,
                                const SchemeConfig& cfg, const SteadyOptions& opts = {});

}  // namespace rss
