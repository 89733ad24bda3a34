#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <utility>
#include <vector>

#include "rss/banded.hpp"
#include "rss/grid.hpp"
#include "rss/linear_operator.hpp"

namespace rss {

/// Which continuous operator a discrete 1D operator approximates.
enum class Derivative {
  First,          ///< +d/dx
  NegativeSecond  ///< -d2/dx2
};

/// Row-stencil matrix: a constant 3-point interior stencil, explicit first and
/// last rows (dense over their first/last few columns), and an overall scale.
/// Coefficients are kept unscaled so that printed rationals survive exactly.
template <typename Scalar>
struct StencilRows {
  using Index = Eigen::Index;
  using Row = std::vector<Scalar>;

  Index n = 0;
  Scalar scale = Scalar(1);
  Scalar left = 0, centre = 0, right = 0;
  Row first;  ///< columns 0 .. first.size()-1
  Row last;   ///< columns n-last.size() .. n-1
  /// Weight of the (off-grid) boundary value in the first / last row.
  Scalar left_boundary = 0;
  Scalar right_boundary = 0;

  Scalar coefficient(Index i, Index j) const {
    if (i == 0) return j < static_cast<Index>(first.size()) ? first[j] : Scalar(0);
    if (i == n - 1) {
      const Index off = j - (n - static_cast<Index>(last.size()));
      return off >= 0 ? last[off] : Scalar(0);
    }
    if (j == i - 1) return left;
    if (j == i) return centre;
    if (j == i + 1) return right;
    return Scalar(0);
  }

  template <typename Dense>
  void apply_cols(const Dense& u, Dense& v) const {
    v.resize(n, u.cols());
    if (n > 2)
      v.middleRows(1, n - 2) = left * u.topRows(n - 2) + centre * u.middleRows(1, n - 2) +
                               right * u.bottomRows(n - 2);
    v.row(0) = first[0] * u.row(0);
    for (Index k = 1; k < static_cast<Index>(first.size()); ++k) v.row(0) += first[k] * u.row(k);
    const Index off = n - static_cast<Index>(last.size());
    v.row(n - 1) = last[0] * u.row(off);
    for (Index k = 1; k < static_cast<Index>(last.size()); ++k)
      v.row(n - 1) += last[k] * u.row(off + k);
    v *= scale;
  }

  template <typename Dense>
  void apply_transpose_cols(const Dense& w, Dense& y) const {
    y.setZero(n, w.cols());
    if (n > 2) {
      y.topRows(n - 2) += left * w.middleRows(1, n - 2);
      y.middleRows(1, n - 2) += centre * w.middleRows(1, n - 2);
      y.bottomRows(n - 2) += right * w.middleRows(1, n - 2);
    }
    for (Index k = 0; k < static_cast<Index>(first.size()); ++k) y.row(k) += first[k] * w.row(0);
    const Index off = n - static_cast<Index>(last.size());
    for (Index k = 0; k < static_cast<Index>(last.size()); ++k)
      y.row(off + k) += last[k] * w.row(n - 1);
    y *= scale;
  }
};

/// Implicit fourth-order operator P v = Q u, formally P^{-1} Q.
///
/// P is tridiagonal and factorised once at construction; applications never
/// form P^{-1}. The boundary rows of P carry `p_boundary_sign`, which is -1
/// for the second derivative: its closing rows of Q are exact for +u'' while
/// the interior rows approximate -u''.
template <typename Scalar>
class CompactOperator {
 public:
  using Index = Eigen::Index;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  CompactOperator(Grid1D grid, Derivative kind, Scalar p_off, Scalar p_boundary_sign,
                  StencilRows<Scalar> q)
      : grid_(grid), kind_(kind), p_off_(p_off), p_sign_(p_boundary_sign), q_(std::move(q)) {
    const Index n = grid_.n;
    Vector sub = Vector::Constant(n, p_off_), diag = Vector::Ones(n), sup = Vector::Constant(n, p_off_);
    sub[0] = 0;
    sup[n - 1] = 0;
    diag[0] *= p_sign_;
    sup[0] *= p_sign_;
    diag[n - 1] *= p_sign_;
    sub[n - 1] *= p_sign_;
    p_lu_ = TridiagonalLU<Scalar>(sub, diag, sup);
    // P^T has the transposed off-diagonals.
    Vector tsub = Vector::Zero(n), tsup = Vector::Zero(n);
    for (Index i = 1; i < n; ++i) tsub[i] = sup[i - 1];
    for (Index i = 0; i + 1 < n; ++i) tsup[i] = sub[i + 1];
    pt_lu_ = TridiagonalLU<Scalar>(tsub, diag, tsup);
  }

  const Grid1D& grid() const { return grid_; }
  Index size() const { return grid_.n; }
  Derivative kind() const { return kind_; }
  int accuracy() const { return 4; }
  const StencilRows<Scalar>& q_rows() const { return q_; }
  Scalar p_boundary_sign() const { return p_sign_; }

  Scalar p(Index i, Index j) const {
    const Index n = size();
    Scalar v = (i == j) ? Scalar(1) : ((j == i - 1 || j == i + 1) ? p_off_ : Scalar(0));
    if (i == 0 || i == n - 1) v *= p_sign_;
    return v;
  }

  /// Scaled entry of Q.
  Scalar q(Index i, Index j) const { return q_.scale * q_.coefficient(i, j); }

  Dense p_dense() const {
    Dense m(size(), size());
    for (Index i = 0; i < size(); ++i)
      for (Index j = 0; j < size(); ++j) m(i, j) = p(i, j);
    return m;
  }

  Dense q_dense() const {
    Dense m(size(), size());
    for (Index i = 0; i < size(); ++i)
      for (Index j = 0; j < size(); ++j) m(i, j) = q(i, j);
    return m;
  }

  /// P^{-1} Q assembled densely; for small oracles only.
  Dense to_dense() const {
    Dense m = q_dense();
    p_lu_.solve_in_place(m);
    return m;
  }

  /// Applies the operator to every column of u (homogeneous boundary data).
  void apply_cols(const Dense& u, Dense& v) const {
    require(u.rows() == size(), ErrorCode::DimensionMismatch, "compact apply");
    q_.apply_cols(u, v);
    p_lu_.solve_in_place(v);
  }

  /// Affine application with boundary values per column: `left(c)` and
  /// `right(c)` are the values of column c just outside the grid.
  template <typename RowL, typename RowR>
  void apply_cols(const Dense& u, Dense& v, const RowL& left, const RowR& right) const {
    require(u.rows() == size(), ErrorCode::DimensionMismatch, "compact apply");
    require(left.size() == u.cols() && right.size() == u.cols(), ErrorCode::DimensionMismatch,
            "compact boundary data");
    q_.apply_cols(u, v);
    v.row(0) += (q_.scale * q_.left_boundary) * left;
    v.row(size() - 1) += (q_.scale * q_.right_boundary) * right;
    p_lu_.solve_in_place(v);
  }

  void apply_transpose_cols(const Dense& u, Dense& v) const {
    require(u.rows() == size(), ErrorCode::DimensionMismatch, "compact transpose apply");
    Dense w = u;
    pt_lu_.solve_in_place(w);
    q_.apply_transpose_cols(w, v);
  }

  Vector apply(const Vector& u) const {
    Dense v;
    apply_cols(Dense(u), v);
    return v.col(0);
  }

  Vector apply(const Vector& u, Scalar left, Scalar right) const {
    Dense v;
    Eigen::Matrix<Scalar, 1, 1> l(left), r(right);
    apply_cols(Dense(u), v, l, r);
    return v.col(0);
  }

 private:
  Grid1D grid_;
  Derivative kind_;
  Scalar p_off_;
  Scalar p_sign_;
  StencilRows<Scalar> q_;
  TridiagonalLU<Scalar> p_lu_;
  TridiagonalLU<Scalar> pt_lu_;
};

/// Explicit banded second-order operator on a 1D grid.
template <typename Scalar>
struct SparseOperator {
  using Index = Eigen::Index;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Grid1D grid;
  Derivative kind = Derivative::NegativeSecond;
  BandedMatrix<Scalar> matrix;

  Index size() const { return matrix.rows(); }
  bool symmetric() const { return matrix.is_symmetric(); }
  Scalar operator()(Index i, Index j) const { return matrix(i, j); }

  void apply_cols(const Dense& u, Dense& v) const {
    require(u.rows() == size(), ErrorCode::DimensionMismatch, "sparse apply");
    const Index n = size();
    const Index kl = matrix.lower(), ku = matrix.upper();
    v.setZero(n, u.cols());
    for (Index i = 0; i < n; ++i)
      for (Index j = std::max<Index>(0, i - kl); j <= std::min<Index>(n - 1, i + ku); ++j) {
        const Scalar a = matrix(i, j);
        if (a != Scalar(0)) v.row(i) += a * u.row(j);
      }
  }

  void apply_transpose_cols(const Dense& u, Dense& v) const {
    require(u.rows() == size(), ErrorCode::DimensionMismatch, "sparse transpose apply");
    const Index n = size();
    const Index kl = matrix.lower(), ku = matrix.upper();
    v.setZero(n, u.cols());
    for (Index i = 0; i < n; ++i)
      for (Index j = std::max<Index>(0, i - kl); j <= std::min<Index>(n - 1, i + ku); ++j) {
        const Scalar a = matrix(i, j);
        if (a != Scalar(0)) v.row(j) += a * u.row(i);
      }
  }

  Vector apply(const Vector& u) const { return matrix * u; }
  Dense to_dense() const { return matrix.to_dense(); }
};

// ---------------------------------------------------------------------------
// Builders

/// Fourth-order compact first derivative, P = tridiag(1/4, 1, 1/4).
template <typename Scalar = double>
CompactOperator<Scalar> build_compact_d1(const Grid1D& grid) {
  require(grid.n >= 4, ErrorCode::GridTooSmall, "compact d1 needs n >= 4");
  require(grid.bc == BoundaryCondition::Dirichlet, ErrorCode::InvalidArgument,
          "compact d1 is defined on vertex-centred (Dirichlet) grids");
  const Scalar a1 = Scalar(-2), a2 = Scalar(3), a3 = Scalar(-2) / Scalar(3), a4 = Scalar(1) / Scalar(8);
  StencilRows<Scalar> q;
  q.n = grid.n;
  q.scale = Scalar(1) / (Scalar(2) * Scalar(grid.h));
  q.left = Scalar(-3) / Scalar(2);
  q.centre = Scalar(0);
  q.right = Scalar(3) / Scalar(2);
  q.first = {a1, a2, a3, a4};
  q.last = {-a4, -a3, -a2, -a1};
  q.left_boundary = -(a1 + a2 + a3 + a4);
  q.right_boundary = a1 + a2 + a3 + a4;
  return CompactOperator<Scalar>(grid, Derivative::First, Scalar(1) / Scalar(4), Scalar(1), std::move(q));
}

/// Fourth-order compact -d2/dx2, P = tridiag(1/10, 1, 1/10), closing rows
/// according to the grid's boundary condition.
template <typename Scalar = double>
CompactOperator<Scalar> build_compact_d2(const Grid1D& grid) {
  require(grid.n >= 5, ErrorCode::GridTooSmall, "compact d2 needs n >= 5");
  StencilRows<Scalar> q;
  q.n = grid.n;
  q.scale = Scalar(1) / (Scalar(grid.h) * Scalar(grid.h));
  q.left = Scalar(-6) / Scalar(5);
  q.centre = Scalar(12) / Scalar(5);
  q.right = Scalar(-6) / Scalar(5);
  if (grid.bc == BoundaryCondition::Dirichlet) {
    q.first = {Scalar(-67) / Scalar(60), Scalar(-7) / Scalar(12), Scalar(13) / Scalar(10),
               Scalar(-61) / Scalar(120), Scalar(1) / Scalar(12)};
    Scalar sum(0);
    for (Scalar a : q.first) sum += a;
    q.left_boundary = q.right_boundary = -sum;
  } else {
    q.first = {Scalar(2681) / Scalar(480), Scalar(-32) / Scalar(3), Scalar(113) / Scalar(40),
               Scalar(-13) / Scalar(15), Scalar(59) / Scalar(480)};
  }
  q.last.assign(q.first.rbegin(), q.first.rend());
  return CompactOperator<Scalar>(grid, Derivative::NegativeSecond, Scalar(1) / Scalar(10), Scalar(-1),
                                 std::move(q));
}

/// Second-order -d2/dx2: tridiag(-1, 2, -1)/h^2 for Dirichlet; for Neumann the
/// end rows become (1, -1)/h^2, which keeps the matrix symmetric.
template <typename Scalar = double>
SparseOperator<Scalar> build_fd2_d2(const Grid1D& grid) {
  require(grid.n >= 2, ErrorCode::GridTooSmall, "fd2 d2 needs n >= 2");
  const Index n = grid.n;
  const Scalar ih2 = Scalar(1) / (Scalar(grid.h) * Scalar(grid.h));
  BandedMatrix<Scalar> m(n, 1, 1);
  for (Index i = 0; i < n; ++i) {
    m.coeffRef(i, i) = Scalar(2) * ih2;
    if (i > 0) m.coeffRef(i, i - 1) = -ih2;
    if (i + 1 < n) m.coeffRef(i, i + 1) = -ih2;
  }
  if (grid.bc == BoundaryCondition::Neumann) {
    m.coeffRef(0, 0) = ih2;
    m.coeffRef(n - 1, n - 1) = ih2;
  }
  return {grid, Derivative::NegativeSecond, std::move(m)};
}

/// Second-order +d/dx: centred (-1, 0, 1)/(2h) inside, one-sided
/// (-3, 4, -1)/(2h) closures on the first and last rows.
template <typename Scalar = double>
SparseOperator<Scalar> build_fd2_d1(const Grid1D& grid) {
  require(grid.n >= 3, ErrorCode::GridTooSmall, "fd2 d1 needs n >= 3");
  const Index n = grid.n;
  const Scalar i2h = Scalar(1) / (Scalar(2) * Scalar(grid.h));
  BandedMatrix<Scalar> m(n, 2, 2);
  for (Index i = 1; i + 1 < n; ++i) {
    m.coeffRef(i, i - 1) = -i2h;
    m.coeffRef(i, i + 1) = i2h;
  }
  m.coeffRef(0, 0) = Scalar(-3) * i2h;
  m.coeffRef(0, 1) = Scalar(4) * i2h;
  m.coeffRef(0, 2) = -i2h;
  m.coeffRef(n - 1, n - 1) = Scalar(3) * i2h;
  m.coeffRef(n - 1, n - 2) = Scalar(-4) * i2h;
  m.coeffRef(n - 1, n - 3) = i2h;
  return {grid, Derivative::First, std::move(m)};
}

// ---------------------------------------------------------------------------
// Column-batched application for any 1D operator

template <typename Op>
concept ColumnOperator = requires(const Op& op, const Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  op.apply_cols(u, v);
  { op.size() } -> std::convertible_to<Eigen::Index>;
};

inline void apply_cols(const LinearOperator& op, const Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  require(u.rows() == op.size(), ErrorCode::DimensionMismatch, "operator apply");
  v.resize(u.rows(), u.cols());
  Eigen::VectorXd in, out;
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    in = u.col(c);
    op.apply(in, out);
    v.col(c) = out;
  }
}

template <ColumnOperator Op>
void apply_cols(const Op& op, const Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  op.apply_cols(u, v);
}

template <typename Op>
Eigen::Index op_size(const Op& op) {
  return op.size();
}

/// Wraps a 1D operator as a LinearOperator (with transpose when available).
template <ColumnOperator Op>
LinearOperator to_linear_operator(Op op) {
  auto shared = std::make_shared<const Op>(std::move(op));
  auto fwd = [shared](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    Eigen::MatrixXd v;
    shared->apply_cols(Eigen::MatrixXd(x), v);
    y = v.col(0);
  };
  auto bwd = [shared](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    Eigen::MatrixXd v;
    shared->apply_transpose_cols(Eigen::MatrixXd(x), v);
    y = v.col(0);
  };
  return {shared->size(), fwd, bwd};
}

// ---------------------------------------------------------------------------
// Tensor composition (never assembles the Kronecker matrix)

/// (I_ny (x) opx): applies opx along x to a field stored x-fastest.
template <typename OpX>
LinearOperator along_x(OpX opx, const Grid2D& g) {
  require(op_size(opx) == g.gx.n, ErrorCode::DimensionMismatch, "along_x");
  auto shared = std::make_shared<const OpX>(std::move(opx));
  const Index nx = g.gx.n, ny = g.gy.n;
  return {g.size(), [shared, nx, ny](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            Eigen::MatrixXd v;
            apply_cols(*shared, Eigen::Map<const Eigen::MatrixXd>(x.data(), nx, ny), v);
            y = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
          }};
}

/// (opy (x) I_nx): applies opy along y.
template <typename OpY>
LinearOperator along_y(OpY opy, const Grid2D& g) {
  require(op_size(opy) == g.gy.n, ErrorCode::DimensionMismatch, "along_y");
  auto shared = std::make_shared<const OpY>(std::move(opy));
  const Index nx = g.gx.n, ny = g.gy.n;
  return {g.size(), [shared, nx, ny](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            Eigen::MatrixXd v;
            apply_cols(*shared, Eigen::Map<const Eigen::MatrixXd>(x.data(), nx, ny).transpose(), v);
            y.resize(nx * ny);
            Eigen::Map<Eigen::MatrixXd>(y.data(), nx, ny) = v.transpose();
          }};
}

/// (opy (x) I) + (I (x) opx) under the x-fastest ordering.
template <typename OpX, typename OpY>
LinearOperator kron_sum_2d(OpX opx, OpY opy, const Grid2D& g) {
  require(op_size(opx) == g.gx.n && op_size(opy) == g.gy.n, ErrorCode::DimensionMismatch,
          "kron_sum_2d");
  auto sx = std::make_shared<const OpX>(std::move(opx));
  auto sy = std::make_shared<const OpY>(std::move(opy));
  const Index nx = g.gx.n, ny = g.gy.n;
  return {g.size(), [sx, sy, nx, ny](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            Eigen::Map<const Eigen::MatrixXd> u(x.data(), nx, ny);
            Eigen::MatrixXd vx, vy;
            apply_cols(*sx, u, vx);
            apply_cols(*sy, u.transpose(), vy);
            vx += vy.transpose();
            y = Eigen::Map<const Eigen::VectorXd>(vx.data(), vx.size());
          }};
}

/// Three-term Kronecker sum on an x-fastest 3D field.
template <typename Op>
LinearOperator kron_sum_3d(Op opx, Op opy, Op opz, const Grid3D& g) {
  require(op_size(opx) == g.gx.n && op_size(opy) == g.gy.n && op_size(opz) == g.gz.n,
          ErrorCode::DimensionMismatch, "kron_sum_3d");
  auto sx = std::make_shared<const Op>(std::move(opx));
  auto sy = std::make_shared<const Op>(std::move(opy));
  auto sz = std::make_shared<const Op>(std::move(opz));
  const Index nx = g.gx.n, ny = g.gy.n, nz = g.gz.n;
  return {g.size(), [sx, sy, sz, nx, ny, nz](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
            y.resize(nx * ny * nz);
            Eigen::MatrixXd v, t;
            // x: contiguous columns of length nx
            apply_cols(*sx, Eigen::Map<const Eigen::MatrixXd>(x.data(), nx, ny * nz), v);
            Eigen::Map<Eigen::MatrixXd>(y.data(), nx, ny * nz) = v;
            // y: one (nx, ny) slab per k
            for (Index k = 0; k < nz; ++k) {
              Eigen::Map<const Eigen::MatrixXd> slab(x.data() + k * nx * ny, nx, ny);
              apply_cols(*sy, slab.transpose(), t);
              Eigen::Map<Eigen::MatrixXd>(y.data() + k * nx * ny, nx, ny) += t.transpose();
            }
            // z: rows of the (nx*ny, nz) view
            apply_cols(*sz, Eigen::Map<const Eigen::MatrixXd>(x.data(), nx * ny, nz).transpose(), t);
            Eigen::Map<Eigen::MatrixXd>(y.data(), nx * ny, nz) += t.transpose();
          }};
}

}  // namespace rss
