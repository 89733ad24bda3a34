#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rss/compact.hpp"
#include "rss/grid.hpp"
#include "rss/solvers.hpp"
#include "rss/timestep.hpp"

namespace rss {

/// A: g = 1. B: g(x) = (1 - (1 - 2x)^2)^2. None: lid at rest.
enum class Lid { A, B, None };

const char* to_string(Lid lid);
Lid lid_from_string(const std::string& s);
double lid_velocity(Lid lid, double x);

struct CavityConfig {
  double re = 100.0;
  Index n = 63;      ///< interior points along x
  double ly = 1.0;   ///< 1 or 2; for 2 the y direction has 2n + 1 points
  Lid lid = Lid::A;
  SchemeConfig scheme;
  double eps = 1e-5;  ///< stop when ||(psi^{k+1} - psi^k)/dt|| < eps
  double t_max = 2000.0;
  int wall_order = 4;
  double poisson_tol = 1e-12;
  int nlrss_refresh = 1;  ///< rebuild B_k every m steps
  double krylov_tol = 1e-8;
  double blowup = 1e10;
  long max_steps = -1;
  int history_stride = 1;
  bool convection = true;
  /// Extrapolate whole outer steps (walls, omega, psi) rather than the
  /// omega transport alone with frozen walls.
  bool coupled_extrapolation = true;

  Grid2D grid() const;
  void validate() const;
};

/// Vorticity just outside the interior grid. bottom/top have one entry per
/// interior x node, left/right one per interior y node.
struct WallValues {
  Eigen::VectorXd bottom, top, left, right;

  static WallValues zero(const Grid2D& g);
};

/// Interior fields as (nx, ny) matrices; psi vanishes on the walls.
struct FlowState {
  Eigen::MatrixXd omega;
  Eigen::MatrixXd psi;
  WallValues walls;

  static FlowState zero(const Grid2D& g);
};

/// Printed second-order closures. `g` is sampled at the interior x nodes.
WallValues wall_vorticity_order2(const Eigen::MatrixXd& psi, const Eigen::VectorXd& g, double h);
/// Fourth-order closures, lid term -25 g / (6h).
WallValues wall_vorticity_order4(const Eigen::MatrixXd& psi, const Eigen::VectorXd& g, double h);

/// Operators shared by every step on one grid.
class CavityOperators {
 public:
  explicit CavityOperators(const Grid2D& g);

  const Grid2D& grid() const { return grid_; }
  double h() const { return grid_.gx.h; }
  const std::shared_ptr<const FastPoissonContext>& fast() const { return fast_; }
  /// Compact -Laplacian with homogeneous data.
  const LinearOperator& a4() const { return a4_; }

  /// Compact -Laplacian of omega with the given wall values.
  Eigen::MatrixXd negative_laplacian(const Eigen::MatrixXd& u, const WallValues& w) const;
  /// Compact d/dx and d/dy with boundary values.
  Eigen::MatrixXd dx(const Eigen::MatrixXd& u, const Eigen::VectorXd& left, const Eigen::VectorXd& right) const;
  Eigen::MatrixXd dy(const Eigen::MatrixXd& u, const Eigen::VectorXd& bottom, const Eigen::VectorXd& top) const;

  /// psi_y * omega_x - psi_x * omega_y; psi vanishes on the walls.
  Eigen::MatrixXd convective_term(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& omega,
                                  const WallValues& w) const;
  Eigen::MatrixXd convective_term(const Eigen::MatrixXd& psi, const Eigen::MatrixXd& omega) const;

  /// Solves A4 psi = -omega from the initial guess in psi.
  KrylovStats poisson_solve_psi(const Eigen::MatrixXd& omega, Eigen::MatrixXd& psi, double tol = 1e-12) const;

  /// (1/Re) A2 + diag(Dy psi) Dx - diag(Dx psi) Dy with centred second-order
  /// differences and zero wall data.
  Eigen::SparseMatrix<double, Eigen::RowMajor> nlrss_preconditioner(const Eigen::MatrixXd& psi, double re) const;

  const Eigen::SparseMatrix<double, Eigen::RowMajor>& a2_sparse() const { return a2_; }

 private:
  Grid2D grid_;
  CompactOperator<double> d2x_, d2y_, d1x_, d1y_;
  std::shared_ptr<const FastPoissonContext> fast_;
  LinearOperator a4_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> a2_, cdx_, cdy_;
};

struct VortexPoint {
  std::string label;
  double value = 0.0;  ///< sign-normalized so the primary vortex is positive
  double psi = 0.0;    ///< raw stream function value
  double x = 0.0, y = 0.0;
  Index i = 0, j = 0;
};

struct VortexReport {
  VortexPoint primary;
  std::vector<VortexPoint> secondary;
};

/// Primary vortex at the node of largest |psi|; secondary vortices are local
/// extrema of the opposite sign with |psi| above the threshold.
VortexReport locate_vortices(const Eigen::MatrixXd& psi, const Grid2D& g, double threshold = 1e-5);

struct CavityResult {
  Outcome outcome = Outcome::NotConverged;
  double tc = 0.0;
  long steps = 0;
  double nt = 0.0;  ///< T_c / dt, times 3 for the extrapolated schemes
  std::vector<HistoryPoint> history;
  FlowState state;
  VortexReport vortices;
  int poisson_iterations_max = 0;
  double poisson_iterations_mean = 0.0;
  double seconds = 0.0;
};

class CavitySolver {
 public:
  explicit CavitySolver(CavityConfig cfg);
  CavitySolver(CavityConfig cfg, std::shared_ptr<const CavityOperators> ops);

  const CavityConfig& config() const { return cfg_; }
  const CavityOperators& operators() const { return *ops_; }
  /// Lid data as seen by the wall closures (sign flipped so that psi < 0 in
  /// the primary vortex for a lid moving towards +x).
  const Eigen::VectorXd& lid_data() const { return lid_; }

  WallValues walls(const Eigen::MatrixXd& psi) const;

  /// Transport problem for omega with psi and the wall values frozen.
  SemilinearProblem transport_problem(const FlowState& s, bool convection = true) const;

  /// Wall update, one transport step, Poisson solve. Returns the Poisson stats.
  KrylovStats step(FlowState& s);

  /// Steady Stokes state by the same algorithm with convection off and Re = 1.
  /// dt <= 0 picks 4 h^2, which keeps the lagged wall update stable at tau = 10.
  FlowState stokes_init(double dt = 0.0, double tau = 10.0, double eps = 1e-8, long max_steps = 200000) const;

  using Observer = std::function<void(long step, double t, double residual)>;
  CavityResult run(const FlowState& initial, const Observer& observer = nullptr);
  CavityResult run(const Observer& observer = nullptr);

 private:
  StabilizerPtr refreshed_bk(const Eigen::MatrixXd& psi);
  KrylovStats advance(FlowState& s, const SchemeConfig& scheme, const StabilizerPtr& bk) const;

  CavityConfig cfg_;
  std::shared_ptr<const CavityOperators> ops_;
  Eigen::VectorXd lid_;
  StabilizerPtr b_rss_;
  StabilizerPtr b_k_;
  long steps_since_refresh_ = 0;
};

}  // namespace rss
