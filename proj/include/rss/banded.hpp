#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rss/error.hpp"

namespace rss {

/// Square banded matrix in LAPACK-style band storage: entry (i, j) with
/// -kl <= j - i <= ku lives at bands(ku + i - j, j).
template <typename Scalar>
class BandedMatrix {
 public:
  using Index = Eigen::Index;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BandedMatrix() = default;
  BandedMatrix(Index n, Index kl, Index ku)
      : n_(n), kl_(kl), ku_(ku), bands_(Dense::Zero(kl + ku + 1, n)) {}

  Index rows() const { return n_; }
  Index cols() const { return n_; }
  Index lower() const { return kl_; }
  Index upper() const { return ku_; }

  bool in_band(Index i, Index j) const { return j - i <= ku_ && i - j <= kl_; }

  Scalar operator()(Index i, Index j) const {
    return in_band(i, j) ? bands_(ku_ + i - j, j) : Scalar(0);
  }

  Scalar& coeffRef(Index i, Index j) {
    require(in_band(i, j), ErrorCode::InvalidArgument, "entry outside the band");
    return bands_(ku_ + i - j, j);
  }

  const Dense& bands() const { return bands_; }

  template <typename In, typename Out>
  void apply(const Eigen::MatrixBase<In>& x, Eigen::MatrixBase<Out> const& y_) const {
    auto& y = const_cast<Eigen::MatrixBase<Out>&>(y_);
    require(x.size() == n_, ErrorCode::DimensionMismatch, "banded apply");
    for (Index i = 0; i < n_; ++i) {
      const Index j0 = std::max<Index>(0, i - kl_);
      const Index j1 = std::min<Index>(n_ - 1, i + ku_);
      Scalar acc(0);
      for (Index j = j0; j <= j1; ++j) acc += bands_(ku_ + i - j, j) * x[j];
      y[i] = acc;
    }
  }

  Vector operator*(const Vector& x) const {
    Vector y(n_);
    apply(x, y);
    return y;
  }

  Dense to_dense() const {
    Dense d = Dense::Zero(n_, n_);
    for (Index j = 0; j < n_; ++j)
      for (Index i = std::max<Index>(0, j - ku_); i <= std::min<Index>(n_ - 1, j + kl_); ++i)
        d(i, j) = bands_(ku_ + i - j, j);
    return d;
  }

  /// alpha * I + beta * this
  BandedMatrix shifted(Scalar alpha, Scalar beta) const {
    BandedMatrix out = *this;
    out.bands_ *= beta;
    out.bands_.row(ku_).array() += alpha;
    return out;
  }

  bool is_symmetric() const {
    if (kl_ != ku_) return false;
    for (Index j = 0; j < n_; ++j)
      for (Index i = j + 1; i <= std::min<Index>(n_ - 1, j + kl_); ++i)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }

  static BandedMatrix from_sparse(const Eigen::SparseMatrix<Scalar>& m) {
    require(m.rows() == m.cols(), ErrorCode::DimensionMismatch, "banded matrix must be square");
    Index kl = 0, ku = 0;
    for (Index k = 0; k < m.outerSize(); ++k)
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(m, k); it; ++it) {
        kl = std::max<Index>(kl, it.row() - it.col());
        ku = std::max<Index>(ku, it.col() - it.row());
      }
    BandedMatrix out(m.rows(), kl, ku);
    for (Index k = 0; k < m.outerSize(); ++k)
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(m, k); it; ++it)
        out.coeffRef(it.row(), it.col()) += it.value();
    return out;
  }

  Eigen::SparseMatrix<Scalar> to_sparse() const {
    std::vector<Eigen::Triplet<Scalar>> t;
    for (Index j = 0; j < n_; ++j)
      for (Index i = std::max<Index>(0, j - ku_); i <= std::min<Index>(n_ - 1, j + kl_); ++i)
        if (bands_(ku_ + i - j, j) != Scalar(0)) t.emplace_back(i, j, bands_(ku_ + i - j, j));
    Eigen::SparseMatrix<Scalar> s(n_, n_);
    s.setFromTriplets(t.begin(), t.end());
    return s;
  }

 private:
  Index n_ = 0;
  Index kl_ = 0;
  Index ku_ = 0;
  Dense bands_;
};

/// LU factorization of a banded matrix without pivoting. Intended for the
/// diagonally dominant systems (Id + s B) met by the time steppers.
template <typename Scalar>
class BandedFactorization {
 public:
  using Index = Eigen::Index;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BandedFactorization() = default;

  explicit BandedFactorization(const BandedMatrix<Scalar>& m) : lu_(m) {
    using std::abs;
    const Index n = lu_.rows();
    const Index kl = lu_.lower();
    const Index ku = lu_.upper();
    const Scalar scale = lu_.bands().cwiseAbs().maxCoeff();
    const Scalar floor = Scalar(1e-14) * (scale > Scalar(0) ? scale : Scalar(1));
    for (Index k = 0; k < n; ++k) {
      const Scalar pivot = lu_(k, k);
      if (!(abs(pivot) > floor)) throw Error(ErrorCode::SingularMatrix, "zero pivot in banded LU");
      const Index iend = std::min<Index>(n - 1, k + kl);
      const Index jend = std::min<Index>(n - 1, k + ku);
      for (Index i = k + 1; i <= iend; ++i) {
        Scalar& lik = lu_.coeffRef(i, k);
        lik /= pivot;
        if (lik == Scalar(0)) continue;
        for (Index j = k + 1; j <= jend; ++j) lu_.coeffRef(i, j) -= lik * lu_(k, j);
      }
    }
  }

  Index size() const { return lu_.rows(); }
  Index bandwidth() const { return std::max(lu_.lower(), lu_.upper()); }

  template <typename Derived>
  void solve_in_place(Eigen::MatrixBase<Derived>& x) const {
    const Index n = lu_.rows();
    require(x.size() == n, ErrorCode::DimensionMismatch, "banded solve");
    const Index kl = lu_.lower();
    const Index ku = lu_.upper();
    for (Index i = 1; i < n; ++i) {
      Scalar acc = x[i];
      for (Index j = std::max<Index>(0, i - kl); j < i; ++j) acc -= lu_(i, j) * x[j];
      x[i] = acc;
    }
    for (Index i = n - 1; i >= 0; --i) {
      Scalar acc = x[i];
      for (Index j = i + 1; j <= std::min<Index>(n - 1, i + ku); ++j) acc -= lu_(i, j) * x[j];
      x[i] = acc / lu_(i, i);
    }
  }

  Vector solve(const Vector& b) const {
    Vector x = b;
    solve_in_place(x);
    return x;
  }

 private:
  BandedMatrix<Scalar> lu_;
};

template <typename Scalar>
BandedFactorization<Scalar> banded_factor(const BandedMatrix<Scalar>& m) {
  return BandedFactorization<Scalar>(m);
}

template <typename Scalar>
typename BandedFactorization<Scalar>::Vector banded_solve(
    const BandedFactorization<Scalar>& f, const typename BandedFactorization<Scalar>::Vector& b) {
  return f.solve(b);
}

/// Thomas-algorithm factorization of a tridiagonal matrix with rows
/// (sub[i], diag[i], super[i]). Solves act on every column of a matrix at
/// once, sweeping rows so the inner work is a vector operation.
template <typename Scalar>
class TridiagonalLU {
 public:
  using Index = Eigen::Index;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  TridiagonalLU() = default;

  TridiagonalLU(const Vector& sub, const Vector& diag, const Vector& super)
      : mult_(diag.size()), inv_pivot_(diag.size()), super_(super) {
    using std::abs;
    const Index n = diag.size();
    require(sub.size() == n && super.size() == n, ErrorCode::DimensionMismatch, "tridiagonal bands");
    const Scalar scale = std::max({diag.cwiseAbs().maxCoeff(), sub.cwiseAbs().maxCoeff(),
                                   super.cwiseAbs().maxCoeff()});
    Scalar pivot = diag[0];
    mult_[0] = Scalar(0);
    for (Index i = 0; i < n; ++i) {
      if (i > 0) {
        mult_[i] = sub[i] * inv_pivot_[i - 1];
        pivot = diag[i] - mult_[i] * super_[i - 1];
      }
      if (!(abs(pivot) > Scalar(1e-14) * scale))
        throw Error(ErrorCode::SingularMatrix, "zero pivot in tridiagonal LU");
      inv_pivot_[i] = Scalar(1) / pivot;
    }
  }

  Index size() const { return inv_pivot_.size(); }

  /// Solves in place for every column of x.
  template <typename Derived>
  void solve_in_place(Eigen::MatrixBase<Derived>& x) const {
    const Index n = size();
    require(x.rows() == n, ErrorCode::DimensionMismatch, "tridiagonal solve");
    for (Index i = 1; i < n; ++i) x.row(i) -= mult_[i] * x.row(i - 1);
    x.row(n - 1) *= inv_pivot_[n - 1];
    for (Index i = n - 2; i >= 0; --i)
      x.row(i) = (x.row(i) - super_[i] * x.row(i + 1)) * inv_pivot_[i];
  }

 private:
  Vector mult_;
  Vector inv_pivot_;
  Vector super_;
};

}  // namespace rss
