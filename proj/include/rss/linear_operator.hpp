#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <utility>

#include "rss/error.hpp"

namespace rss {

/// Type-erased, immutable handle on a square linear map. Copies share the
/// underlying callable, which must itself be safe to call concurrently.
class LinearOperator {
 public:
  using Index = Eigen::Index;
  using Vector = Eigen::VectorXd;
  using ApplyFn = std::function<void(const Vector&, Vector&)>;

  LinearOperator() = default;
  LinearOperator(Index n, ApplyFn apply, ApplyFn apply_transpose = nullptr)
      : n_(n), apply_(std::move(apply)), apply_t_(std::move(apply_transpose)) {}

  Index size() const { return n_; }
  Index rows() const { return n_; }
  Index cols() const { return n_; }
  explicit operator bool() const { return static_cast<bool>(apply_); }

  void apply(const Vector& x, Vector& y) const {
    require(x.size() == n_, ErrorCode::DimensionMismatch, "operator apply");
    y.resize(n_);
    apply_(x, y);
  }

  Vector operator*(const Vector& x) const {
    Vector y(n_);
    apply(x, y);
    return y;
  }

  bool has_transpose() const { return static_cast<bool>(apply_t_); }

  Vector apply_transpose(const Vector& x) const {
    require(has_transpose(), ErrorCode::InvalidArgument, "operator has no transpose");
    require(x.size() == n_, ErrorCode::DimensionMismatch, "operator transpose apply");
    Vector y(n_);
    apply_t_(x, y);
    return y;
  }

  /// Column-by-column assembly; meant for small test oracles.
  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m(n_, n_);
    Vector e = Vector::Zero(n_), col(n_);
    for (Index j = 0; j < n_; ++j) {
      e[j] = 1.0;
      apply(e, col);
      m.col(j) = col;
      e[j] = 0.0;
    }
    return m;
  }

  LinearOperator transpose() const {
    require(has_transpose(), ErrorCode::InvalidArgument, "operator has no transpose");
    return {n_, apply_t_, apply_};
  }

  static LinearOperator identity(Index n) {
    return {n, [](const Vector& x, Vector& y) { y = x; }, [](const Vector& x, Vector& y) { y = x; }};
  }

  static LinearOperator zero(Index n) {
    return {n, [](const Vector&, Vector& y) { y.setZero(); },
            [](const Vector&, Vector& y) { y.setZero(); }};
  }

  static LinearOperator from_dense(Eigen::MatrixXd m) {
    require(m.rows() == m.cols(), ErrorCode::DimensionMismatch, "dense operator must be square");
    auto shared = std::make_shared<const Eigen::MatrixXd>(std::move(m));
    return {shared->rows(), [shared](const Vector& x, Vector& y) { y.noalias() = *shared * x; },
            [shared](const Vector& x, Vector& y) { y.noalias() = shared->transpose() * x; }};
  }

  static LinearOperator from_sparse(Eigen::SparseMatrix<double, Eigen::RowMajor> m) {
    require(m.rows() == m.cols(), ErrorCode::DimensionMismatch, "sparse operator must be square");
    auto shared = std::make_shared<const Eigen::SparseMatrix<double, Eigen::RowMajor>>(std::move(m));
    return {shared->rows(), [shared](const Vector& x, Vector& y) { y.noalias() = *shared * x; },
            [shared](const Vector& x, Vector& y) { y.noalias() = shared->transpose() * x; }};
  }

  static LinearOperator diagonal(Vector d) {
    auto shared = std::make_shared<const Vector>(std::move(d));
    auto f = [shared](const Vector& x, Vector& y) { y = shared->cwiseProduct(x); };
    return {shared->size(), f, f};
  }

 private:
  Index n_ = 0;
  ApplyFn apply_;
  ApplyFn apply_t_;
};

/// alpha * a + beta * b
inline LinearOperator combine(double alpha, const LinearOperator& a, double beta,
                              const LinearOperator& b) {
  require(a.size() == b.size(), ErrorCode::DimensionMismatch, "operator sum");
  auto fwd = [=](const LinearOperator::Vector& x, LinearOperator::Vector& y) {
    LinearOperator::Vector t;
    a.apply(x, y);
    b.apply(x, t);
    y = alpha * y + beta * t;
  };
  LinearOperator::ApplyFn bwd;
  if (a.has_transpose() && b.has_transpose()) {
    bwd = [=](const LinearOperator::Vector& x, LinearOperator::Vector& y) {
      y = alpha * a.apply_transpose(x) + beta * b.apply_transpose(x);
    };
  }
  return {a.size(), fwd, bwd};
}

inline LinearOperator operator+(const LinearOperator& a, const LinearOperator& b) {
  return combine(1.0, a, 1.0, b);
}

inline LinearOperator operator*(double alpha, const LinearOperator& a) {
  return combine(alpha, a, 0.0, LinearOperator::zero(a.size()));
}

/// (a + a^T) / 2; needs a transpose.
inline LinearOperator symmetric_part(const LinearOperator& a) {
  return combine(0.5, a, 0.5, a.transpose());
}

}  // namespace rss
