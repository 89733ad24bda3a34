#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <vector>

#include "rss/banded.hpp"
#include "rss/grid.hpp"
#include "rss/linear_operator.hpp"
#include "rss/solvers.hpp"
#include "rss/timestep.hpp"

namespace rss {

/// u(x, t) = exp(-pi^2 t) sin(pi x) on the nodes of a Dirichlet grid.
Eigen::VectorXd heat_manufactured(const Grid1D& grid, double t);
/// u(x, y, t) = exp(-2 pi^2 t) sin(pi x) sin(pi y).
Eigen::VectorXd heat_manufactured(const Grid2D& grid, double t);

/// du/dt - Laplace(u) = f with homogeneous Dirichlet data. A is the compact
/// fourth-order operator, B the second-order one.
struct HeatProblem {
  SemilinearProblem system;
  std::function<Eigen::VectorXd(double)> exact;  ///< may be empty
  double dt_forward_euler = 0.0;                 ///< 2 / rho(A)
};

HeatProblem make_heat_1d(Index n);
HeatProblem make_heat_2d(Index n);

/// f(u) = u^3 - u and its primitive with F(0) = 0.
inline double ac_f(double u) { return u * u * u - u; }
inline double ac_primitive(double u) { return 0.25 * u * u * u * u - 0.5 * u * u; }

/// max |f'| on [-1, 1] and on [-1.1, 1.1].
inline constexpr double kLipschitzUnit = 2.0;
inline constexpr double kLipschitzMargin = 2.63;

/// du/dt - Laplace(u) + f(u)/eps^2 = 0 on the unit square with homogeneous
/// Neumann data, second-order cell-centred Laplacian.
struct AllenCahnProblem {
  double epsilon = 0.1;
  double lipschitz = kLipschitzUnit;
  Grid2D grid;
  BandedMatrix<double> a_banded;  ///< A, also the stabilizer B
  Eigen::SparseMatrix<double, Eigen::RowMajor> a_sparse;
  SemilinearProblem system;  ///< A, B = A, nonlinear term f(u)/eps^2
};

AllenCahnProblem make_allen_cahn(Index n, double epsilon, double lipschitz = kLipschitzUnit);

/// A u + f(u) / eps^2
Eigen::VectorXd ac_residual(const AllenCahnProblem& p, const Eigen::VectorXd& u);
/// 1/2 <Au, u> + <F(u), 1> / eps^2, unweighted sums.
double ac_energy(const AllenCahnProblem& p, const Eigen::VectorXd& u);

/// Stabilized semi-implicit step with S/eps^2 (u^{k+1} - u^k) as the
/// stabilizing term and A treated implicitly.
Eigen::VectorXd shen_stabilized_step(const AllenCahnProblem& p, const Eigen::VectorXd& u, double s, double dt);

/// 0.05 * uniform[-1, 1], seeded.
Eigen::VectorXd ac_initial_state(Index size, unsigned seed = 2024u, double amplitude = 0.05);

struct EnergyRecord {
  std::vector<HistoryPoint> energy;
  Eigen::VectorXd state;
  /// Largest E(u^{k+1}) - E(u^k) over the run.
  double max_increase = 0.0;
};

/// Runs `steps` steps of the configured scheme and records the energy.
EnergyRecord run_allen_cahn(const AllenCahnProblem& p, const Eigen::VectorXd& u0, const SchemeConfig& cfg,
                            int steps);

}  // namespace rss
