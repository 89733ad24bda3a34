#pragma once

#include <Eigen/Core>

#include "rss/error.hpp"

namespace rss {

using Index = Eigen::Index;

enum class BoundaryCondition { Dirichlet, Neumann };

/// Uniform 1D grid of interior unknowns.
///
/// Dirichlet grids are vertex-centred: x_i = (i + 1) h for i = 0..n-1 with
/// h = L / (n + 1), the boundary values living at x = 0 and x = L.
/// Neumann grids are cell-centred: x_i = (i + 1/2) h with h = L / n.
struct Grid1D {
  Index n = 0;
  double h = 0.0;
  BoundaryCondition bc = BoundaryCondition::Dirichlet;

  static Grid1D dirichlet(Index n, double length = 1.0) {
    require(n >= 1, ErrorCode::GridTooSmall, "grid needs at least one point");
    return {n, length / static_cast<double>(n + 1), BoundaryCondition::Dirichlet};
  }

  static Grid1D neumann(Index n, double length = 1.0) {
    require(n >= 1, ErrorCode::GridTooSmall, "grid needs at least one point");
    return {n, length / static_cast<double>(n), BoundaryCondition::Neumann};
  }

  double node(Index i) const {
    return bc == BoundaryCondition::Dirichlet ? static_cast<double>(i + 1) * h
                                              : (static_cast<double>(i) + 0.5) * h;
  }

  Eigen::VectorXd nodes() const {
    Eigen::VectorXd x(n);
    for (Index i = 0; i < n; ++i) x[i] = node(i);
    return x;
  }
};

/// Tensor grid, unknown (i, j) stored at i + gx.n * j (x fastest). A field is
/// therefore an Eigen column-major (gx.n x gy.n) matrix viewed as a vector.
struct Grid2D {
  Grid1D gx;
  Grid1D gy;

  Index size() const { return gx.n * gy.n; }
  Index index(Index i, Index j) const { return i + gx.n * j; }
};

/// Unknown (i, j, k) stored at i + nx * (j + ny * k).
struct Grid3D {
  Grid1D gx;
  Grid1D gy;
  Grid1D gz;

  Index size() const { return gx.n * gy.n * gz.n; }
  Index index(Index i, Index j, Index k) const { return i + gx.n * (j + gy.n * k); }
};

}  // namespace rss
