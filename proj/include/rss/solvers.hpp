#pragma once

#include <Eigen/Core>

#include <array>
#include <functional>
#include <memory>

#include "rss/banded.hpp"
#include "rss/grid.hpp"
#include "rss/linear_operator.hpp"

namespace rss {

/// y = M^{-1} x for some (approximate) inverse M^{-1}.
using SolveFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Diagonalization of the 2nd-order Dirichlet Laplacian on a 1D, 2D or 3D
/// tensor grid by discrete sine transforms.
class FastPoissonContext {
 public:
  explicit FastPoissonContext(const Grid1D& g);
  explicit FastPoissonContext(const Grid2D& g);
  explicit FastPoissonContext(const Grid3D& g);

  int dim() const { return dim_; }
  Index size() const { return size_; }
  Index extent(int axis) const { return n_[axis]; }
  /// (4/h^2) sin^2(k pi h / 2), k = 1..n, along one axis.
  const Eigen::VectorXd& eigenvalues(int axis) const { return lambda_[axis]; }

  /// Solves (sigma Id + A2) x = rhs, fields stored x-fastest.
  void solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& x, double sigma = 0.0) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double sigma = 0.0) const;

  /// y = (sigma Id + A2) x by stencils; the exact inverse of solve().
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y, double sigma = 0.0) const;

  LinearOperator laplacian(double sigma = 0.0) const;
  SolveFn solver(double sigma = 0.0) const;

 private:
  void transform(Eigen::VectorXd& v) const;

  int dim_ = 0;
  Index size_ = 0;
  std::array<Index, 3> n_{1, 1, 1};
  std::array<double, 3> h_{1, 1, 1};
  std::array<Eigen::VectorXd, 3> lambda_;
};

/// Orthogonal-up-to-scale DST-I of every column: y_k = sum_j x_j sin(pi j k/(n+1)).
void dst1_columns(Eigen::MatrixXd& x);

struct KrylovStats {
  int iterations = 0;
  double final_residual = 0.0;  ///< ||b - A x|| (true residual)
  bool converged = false;
};

struct GmresOptions {
  double tol = 1e-10;  ///< relative to ||b||
  int restart = 30;
  int max_iterations = 1000;
  bool throw_on_failure = true;
};

/// Right-preconditioned restarted GMRES. `x` holds the initial guess on entry.
/// `iterations` counts Krylov steps summed over restarts.
KrylovStats gmres(const LinearOperator& a, const SolveFn& precond, const Eigen::VectorXd& b,
                  Eigen::VectorXd& x, const GmresOptions& opts = {});

SolveFn identity_solver();
/// Dense LU of an assembled operator; for small problems and oracles.
SolveFn dense_solver(const Eigen::MatrixXd& m);
template <typename Scalar>
SolveFn banded_solver(const BandedMatrix<Scalar>& m) {
  auto f = std::make_shared<const BandedFactorization<Scalar>>(m);
  return [f](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = f->solve(x); };
}

struct EigenOptions {
  double tol = 1e-6;
  int max_restarts = 500;
  int krylov_dim = 40;
  unsigned seed = 12345;
};

/// Largest-modulus eigenvalue magnitude by restarted Arnoldi, the Krylov
/// acceleration of power iteration. Stops on ||A x - theta x|| <= tol |theta|.
double spectral_radius(const LinearOperator& a, const EigenOptions& opts = {});

/// Smallest eigenvalue by inverse iteration through `solve` (= A^{-1}).
double min_eigen(const LinearOperator& a, const SolveFn& solve, const EigenOptions& opts = {});

struct EquivalenceBounds {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Extreme generalized Rayleigh quotients <sym(A)u,u>/<Bu,u>: Lanczos on
/// B^{-1} sym(A) in the B inner product, fully reorthogonalized.
EquivalenceBounds equivalence_bounds(const LinearOperator& a, const LinearOperator& b,
                                     const SolveFn& b_solve, double tol = 1e-8);

}  // namespace rss
